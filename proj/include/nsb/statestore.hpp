#ifndef NSB_STATESTORE_HPP
#define NSB_STATESTORE_HPP

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nsb/json.hpp"
#include "nsb/routing.hpp"
#include "nsb/scenario.hpp"

namespace nsb {
namespace statestore {

struct WatchEvent {
  std::string key;
  njson old_value;  // null when the key was absent
  njson new_value;  // null on delete
  uint64_t revision = 0;

  bool is_put() const { return !new_value.is_null(); }
  bool is_delete() const { return new_value.is_null(); }
};

class Watch {
 public:
  std::optional<WatchEvent> poll();
  bool pending() const;

 private:
  friend class KeyValueStore;
  std::vector<std::string> prefixes_;
  std::deque<WatchEvent> queue_;
  mutable std::mutex mu_;
};

// In-process watchable key-value store over '/'-separated key paths.
// A put with an unchanged value is a no-op: no revision bump, no events.
class KeyValueStore {
 public:
  bool put(const std::string& key, njson value);
  std::optional<njson> get(const std::string& key) const;
  bool erase(const std::string& key);
  uint64_t revision() const;

  // prefix matches whole path segments: "/a/b" covers "/a/b" and "/a/b/c",
  // never "/a/bc"
  std::shared_ptr<Watch> watch_prefixes(std::vector<std::string> prefixes);

  std::vector<std::pair<std::string, njson>> list_prefix(
      const std::string& prefix) const;

  njson dump() const;
  void load(const njson& state);

 private:
  void notify(WatchEvent event);

  std::map<std::string, njson> data_;
  uint64_t revision_ = 0;
  std::vector<std::weak_ptr<Watch>> watchers_;
  mutable std::mutex mu_;
};

bool prefix_matches(const std::string& key, const std::string& prefix);

// --- epoch application -------------------------------------------------------

struct RejectedEntry {
  std::string entry;
  std::string reason;
};

struct MutationSummary {
  int links_added = 0;
  int links_updated = 0;
  int links_deleted = 0;
  int tasks_written = 0;
  std::vector<RejectedEntry> rejected;
};

// Writes both /config/links/<e1>/vl_<e2> and /config/links/<e2>/vl_<e1> per
// link entry, /config/run/<node> task lists, and /config/epoch-config.
// Entries naming unknown nodes are recorded and skipped.
MutationSummary apply_epoch(KeyValueStore& store, const scenario::EpochFile& file,
                            const scenario::QuantizationPolicy& q,
                            const std::string& file_name);

// --- epoch replay -------------------------------------------------------------

class EpochSource {
 public:
  virtual ~EpochSource() = default;
  // next file plus its name; nullopt when exhausted
  virtual std::optional<std::pair<scenario::EpochFile, std::string>> next() = 0;
};

// Discrete-time mode: pre-generated files read in index order.
class DirectoryEpochSource : public EpochSource {
 public:
  DirectoryEpochSource(const std::string& dir, const std::string& pattern);
  std::optional<std::pair<scenario::EpochFile, std::string>> next() override;
  size_t count() const { return paths_.size(); }

 private:
  std::vector<std::string> paths_;
  size_t index_ = 0;
};

// Real-time mode: externally injected files, applied immediately.
class QueueEpochSource : public EpochSource {
 public:
  void push(scenario::EpochFile file, std::string name);
  void close();
  std::optional<std::pair<scenario::EpochFile, std::string>> next() override;

 private:
  std::deque<std::pair<scenario::EpochFile, std::string>> queue_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable cv_;
};

struct SimClock {
  int64_t start_unix = 0;
  double now_s = 0;
};

// Applies every file in order, advancing the clock to each file's time.
// time_scale stretches inter-file gaps into wall-clock waits (0 = as fast
// as possible); discrete replays preserve timing relationships that way.
void run_epochs(KeyValueStore& store, EpochSource& source,
                const scenario::QuantizationPolicy& q, double time_scale,
                SimClock* clock,
                const std::function<void(const scenario::EpochFile&,
                                         const MutationSummary&)>& on_applied = nullptr);

// --- node agents ---------------------------------------------------------------

struct TaskLogEntry {
  std::string command;
  bool recognized = false;
};

// Reactive per-node agent: mirrors the node's /config/links subtree into a
// local link table, feeds link events to the routing plug-in, and executes
// recognized run tasks against the local route table.
class NodeAgent {
 public:
  NodeAgent(std::string name, KeyValueStore& store,
            std::shared_ptr<routing::RoutePlugin> plugin,
            const routing::NameResolver* names);

  const std::string& name() const { return name_; }
  void drain_events();

  const std::map<std::string, linkmodel::LinkAttributes>& link_table() const {
    return link_table_;
  }
  const routing::RouteTable& route_table() const { return routes_; }
  const std::vector<TaskLogEntry>& task_log() const { return task_log_; }
  int plugin_calls(routing::LinkEvent::Kind kind) const;

 private:
  void handle_event(const WatchEvent& event);
  void apply_mutations(const std::vector<routing::RouteMutation>& mutations);

  std::string name_;
  std::shared_ptr<Watch> watch_;
  std::shared_ptr<routing::RoutePlugin> plugin_;
  const routing::NameResolver* names_;
  std::map<std::string, linkmodel::LinkAttributes> link_table_;
  routing::RouteTable routes_;
  std::vector<TaskLogEntry> task_log_;
  int add_calls_ = 0, update_calls_ = 0, del_calls_ = 0;
};

}  // namespace statestore
}  // namespace nsb

#endif
