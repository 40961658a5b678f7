#ifndef NSB_ROUTING_HPP
#define NSB_ROUTING_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsb/linkmodel.hpp"
#include "nsb/scenario.hpp"

namespace nsb {
namespace routing {

using NodeKind = linkmodel::EndpointKind;

// node name <-> loopback address mapping (the /etc/hosts analogue)
struct NameResolver {
  std::map<std::string, std::string> loopback_by_name;
  std::map<std::string, std::string> name_by_loopback;

  void add(const std::string& name, const std::string& loopback) {
    loopback_by_name[name] = loopback;
    name_by_loopback[loopback] = name;
  }
  std::optional<std::string> loopback(const std::string& name) const;
  std::optional<std::string> name(const std::string& loopback) const;
};

enum class RouteOrigin { Local, Oracle, Srv6 };

struct RouteEntry {
  std::string destination;  // loopback address (host route)
  std::string next_hop;     // neighbor node name
  RouteOrigin origin = RouteOrigin::Local;

  bool operator==(const RouteEntry&) const = default;
};

// per-node route table; one entry per (destination, origin)
class RouteTable {
 public:
  void replace(const RouteEntry& entry);
  void remove(const std::string& destination, RouteOrigin origin);
  std::optional<RouteEntry> lookup(const std::string& destination,
                                   RouteOrigin origin) const;
  const std::map<std::pair<std::string, int>, RouteEntry>& entries() const {
    return entries_;
  }
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::string, int>, RouteEntry> entries_;
};

struct RouteMutation {
  enum class Kind { Replace, Remove } kind = Kind::Replace;
  RouteEntry entry;
};

struct LinkEvent {
  enum class Kind { Add, Update, Del } kind = Kind::Add;
  std::string node, peer;
  linkmodel::LinkAttributes attrs;
};

// Routing plug-in contract: callbacks are deterministic functions of the
// event plus agent-local state and return route-table mutations.
class RoutePlugin {
 public:
  virtual ~RoutePlugin() = default;
  virtual std::string name() const = 0;
  virtual std::vector<RouteMutation> on_link_add(const LinkEvent& ev,
                                                 const NameResolver& names) = 0;
  virtual std::vector<RouteMutation> on_link_update(const LinkEvent& ev,
                                                    const NameResolver& names) = 0;
  virtual std::vector<RouteMutation> on_link_del(const LinkEvent& ev,
                                                 const NameResolver& names) = 0;
};

// Installs host routes to directly connected neighbors' loopbacks.
class LocalRoutesPlugin : public RoutePlugin {
 public:
  std::string name() const override { return "extra.routing.local6"; }
  std::vector<RouteMutation> on_link_add(const LinkEvent& ev,
                                         const NameResolver& names) override;
  std::vector<RouteMutation> on_link_update(const LinkEvent& ev,
                                            const NameResolver& names) override;
  std::vector<RouteMutation> on_link_del(const LinkEvent& ev,
                                         const NameResolver& names) override;
};

std::shared_ptr<RoutePlugin> make_plugin(const std::string& module_name);

// --- route task grammar ---------------------------------------------------

struct RouteTask {
  std::string destination;  // loopback address
  std::string next_hop;     // node name
};

// Canonical form: "route replace <dst-loopback> via <neighbor>"; a leading
// "ip [-6|-4]" is accepted. Returns nullopt for anything else.
std::optional<RouteTask> parse_route_task(const std::string& command,
                                          const NameResolver& names);
std::string format_route_task(const std::string& dst_loopback,
                              const std::string& next_hop);

// --- path resolution --------------------------------------------------------

// How one node resolves the next hop toward a destination loopback.
class RouteLookup {
 public:
  virtual ~RouteLookup() = default;
  virtual std::optional<std::string> next_hop(const std::string& node,
                                              const std::string& dst_loopback) const = 0;
};

struct PathResult {
  enum class Error { None, NoRoute, Loop };
  std::vector<std::string> nodes;
  Error error = Error::None;
  std::string detail;

  bool ok() const { return error == Error::None; }
};

PathResult resolve_path(const RouteLookup& lookup, const NameResolver& names,
                        const std::string& src, const std::string& dst);

// --- oracle routing -----------------------------------------------------------

enum class Metric { HopCount, PropagationDelay };

struct OracleConfig {
  Metric metric = Metric::HopCount;
  std::vector<std::pair<NodeKind, NodeKind>> pair_classes = {
      {NodeKind::Satellite, NodeKind::Satellite},
      {NodeKind::Satellite, NodeKind::Gateway},
  };
  double drain_lead_s = 5.0;
};

OracleConfig parse_oracle_config(const njson& j, double epoch_interval_s);

struct ReachabilityGap {
  int epoch_index = 0;
  std::string src, dst;
};

struct OracleResult {
  std::vector<scenario::EpochFile> files;  // input files with injected tasks
  std::vector<ReachabilityGap> gaps;
  size_t tasks_emitted = 0;
};

// Precomputes shortest-path next hops per epoch over the alive link set,
// excluding links scheduled for deletion within drain_lead_s (drain before
// break), and appends a route-replace task whenever a next hop changes.
OracleResult oracle_compute(std::vector<scenario::EpochFile> files,
                            const std::map<std::string, NodeKind>& kinds,
                            const NameResolver& names, const OracleConfig& cfg,
                            double epoch_interval_s);

}  // namespace routing
}  // namespace nsb

#endif
