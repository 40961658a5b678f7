#ifndef NSB_SRV6_HPP
#define NSB_SRV6_HPP

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nsb/routing.hpp"

namespace nsb {
namespace srv6 {

// Ordered landmark nodes of one tunnel direction: two or three entries,
// the last being the terminal (user or gateway).
using SidList = std::vector<std::string>;

struct SatPair {
  std::string gss, uss;
  bool operator==(const SatPair&) const = default;
  bool operator<(const SatPair& o) const {
    return std::tie(gss, uss) < std::tie(o.gss, o.uss);
  }
};

enum class SessionState { Registering, Active, HandoverPending, Paused, Lost };

struct Session {
  std::string user, gateway;
  SatPair pair;
  SidList forward_sids;  // gateway -> user: [GSS, USS, U]
  SidList reverse_sids;  // user -> gateway: [USS, GSS, G]
  double last_handover_t = 0;
  SessionState state = SessionState::Registering;
  int heartbeat_misses = 0;

  bool operator==(const Session&) const = default;
};

// [GSS, USS, U]; collapses to [S, U] when GSS == USS
SidList forward_sid_list(const SatPair& pair, const std::string& user);
// [USS, GSS, G]; collapses to [S, G] when GSS == USS
SidList reverse_sid_list(const SatPair& pair, const std::string& gateway);

enum class Strategy { LocalMinAccessDelay, EndToEnd };

struct HandoverConfig {
  double t_lt_s = 60.0;
  double t_el_s = 15.0;
  double control_interval_s = 5.0;
  double t_ho_s = 0.080;
  Strategy strategy = Strategy::EndToEnd;
  std::vector<int> filter_sequence = {1, 2, 4};
  int heartbeat_miss_threshold = 2;
};

// filter ids, per the end-to-end policy table
inline constexpr int kFilterMinLifetime = 1;
inline constexpr int kFilterMinOrbitHops = 2;
inline constexpr int kFilterMaxMinVisibility = 3;
inline constexpr int kFilterMinAccessDelay = 4;
inline constexpr int kFilterMaxMinAccessRate = 5;

inline constexpr int kUnreachableHops = std::numeric_limits<int>::max();

struct CandidatePair {
  std::string gss, uss;
  double gss_visibility_s = 0, uss_visibility_s = 0;
  double gss_access_delay_ms = 0, uss_access_delay_ms = 0;
  double gss_rate_mbps = 0, uss_rate_mbps = 0;
  int orbit_hops = 0;

  bool operator==(const CandidatePair&) const = default;
};

// one ground node's view of a visible satellite (the m-report content)
struct AccessCandidate {
  std::string sat;
  double access_delay_ms = 0;
  double rate_mbps = 0;
  double visibility_s = 0;
};

// Bridge between the control plane and the emulated world.
class ControlPlaneEnv {
 public:
  virtual ~ControlPlaneEnv() = default;
  // visible satellites with link attributes and remaining visibility
  virtual std::vector<AccessCandidate> candidates(const std::string& ground_node,
                                                  double t) = 0;
  // unweighted shortest path length on the current ISL graph;
  // kUnreachableHops when disconnected
  virtual int orbit_hops(const std::string& sat_a, const std::string& sat_b) = 0;
  // one-way delay of a tunnel from `from` through the SID list, or nullopt
  // when some segment is unreachable
  virtual std::optional<double> tunnel_delay_ms(const std::string& from,
                                                const SidList& sids, double t) = 0;
};

// BFS hop count over an adjacency map (satellite names).
int orbit_hops(const std::string& a, const std::string& b,
               const std::map<std::string, std::set<std::string>>& isl_adj);

// Expands a SID list into the full node sequence over the installed routes;
// nullopt when any segment is unreachable (tunnel broken).
std::optional<std::vector<std::string>> sid_path(
    const SidList& sids, const std::string& from,
    const routing::RouteLookup& lookup, const routing::NameResolver& names);

std::vector<CandidatePair> build_candidates(ControlPlaneEnv& env,
                                            const std::string& user,
                                            const std::string& gateway, double t);

// One filter stage; output is always a subset of the input.
std::vector<CandidatePair> apply_filter(std::vector<CandidatePair> pairs,
                                        int filter_id, const HandoverConfig& cfg);

// Applies the configured sequence, then the deterministic (gss, uss)
// tie-break; at most one pair survives. Empty input -> nullopt (the caller
// retains the current pair).
std::optional<CandidatePair> filter_candidates(std::vector<CandidatePair> pairs,
                                               const std::vector<int>& sequence,
                                               const HandoverConfig& cfg);

struct RegistrationOutcome {
  bool ok = false;
  std::string failure_reason;
  Session session;       // valid when ok
  double complete_t = 0; // when the accept reaches the user
  double latency_ms = 0; // request + accept flight time
};

// Registration request via the min-access-delay USS; the gateway picks its
// GSS the same way and answers with the reverse SID list.
RegistrationOutcome register_session(const std::string& user,
                                     const std::string& gateway,
                                     ControlPlaneEnv& env, double t);

struct HandoverPlan {
  SatPair target;
};

// Local strategy: each side independently prefers a strictly lower access
// delay. End-to-end strategy: lifetime/elapsed triggers, then the filter
// pipeline; the current pair is retained when no candidate survives.
std::optional<HandoverPlan> evaluate_handover(const Session& session,
                                              ControlPlaneEnv& env, double t,
                                              const HandoverConfig& cfg);

struct HandoverOutcome {
  bool success = false;
  std::string failure_reason;
  SatPair old_pair, new_pair;
  SidList old_forward, old_reverse, new_forward, new_reverse;
  double t_command_sent = 0;
  double t_command_arrive = -1;   // <0 when the command was lost
  double t_complete_arrive = -1;  // <0 when the reply was lost
  double t_end = 0;               // success: complete arrival; else timeout
  // traffic pauses; start < 0 means no pause on that side
  double gw_pause_start = -1, gw_pause_end = -1;
  double user_pause_start = -1, user_pause_end = -1;
  double user_switch_t = -1;  // user applies the new reverse route
};

// Command over the old tunnel, complete over the new one; missing or late
// completes cancel the handover and restore the old tunnels at timeout.
HandoverOutcome execute_handover(const Session& session, const HandoverPlan& plan,
                                 ControlPlaneEnv& env, double t,
                                 const HandoverConfig& cfg);

// Applies the outcome to the session (call at or after outcome.t_end).
void commit_handover(Session& session, const HandoverOutcome& outcome);

enum class HeartbeatResult { Ok, Miss, TriggerReregister };

// Heartbeats ride the current tunnels; consecutive misses beyond the
// threshold mark the session Lost so registration is re-run.
HeartbeatResult heartbeat_check(Session& session, ControlPlaneEnv& env, double t,
                                const HandoverConfig& cfg);

}  // namespace srv6
}  // namespace nsb

#endif
