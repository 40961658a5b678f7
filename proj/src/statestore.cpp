#include "nsb/statestore.hpp"

#include <chrono>
#include <thread>

#include "nsb/util.hpp"

namespace nsb {
namespace statestore {

bool prefix_matches(const std::string& key, const std::string& prefix) {
  if (key == prefix) return true;
  if (key.size() <= prefix.size() || key.compare(0, prefix.size(), prefix) != 0)
    return false;
  return prefix.back() == '/' || key[prefix.size()] == '/';
}

std::optional<WatchEvent> Watch::poll() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  WatchEvent ev = std::move(queue_.front());
  queue_.pop_front();
  return ev;
}

bool Watch::pending() const {
  std::lock_guard lock(mu_);
  return !queue_.empty();
}

bool KeyValueStore::put(const std::string& key, njson value) {
  std::lock_guard lock(mu_);
  auto it = data_.find(key);
  njson old = it == data_.end() ? njson() : it->second;
  if (it != data_.end() && it->second == value) return false;
  data_[key] = value;
  ++revision_;
  notify({key, std::move(old), std::move(value), revision_});
  return true;
}

std::optional<njson> KeyValueStore::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

bool KeyValueStore::erase(const std::string& key) {
  std::lock_guard lock(mu_);
  auto it = data_.find(key);
  if (it == data_.end()) return false;
  njson old = std::move(it->second);
  data_.erase(it);
  ++revision_;
  notify({key, std::move(old), njson(), revision_});
  return true;
}

uint64_t KeyValueStore::revision() const {
  std::lock_guard lock(mu_);
  return revision_;
}

std::shared_ptr<Watch> KeyValueStore::watch_prefixes(
    std::vector<std::string> prefixes) {
  auto watch = std::make_shared<Watch>();
  watch->prefixes_ = std::move(prefixes);
  std::lock_guard lock(mu_);
  watchers_.push_back(watch);
  return watch;
}

void KeyValueStore::notify(WatchEvent event) {
  // caller holds mu_
  bool any_expired = false;
  for (auto& weak : watchers_) {
    auto watch = weak.lock();
    if (!watch) {
      any_expired = true;
      continue;
    }
    for (const auto& prefix : watch->prefixes_) {
      if (prefix_matches(event.key, prefix)) {
        std::lock_guard wlock(watch->mu_);
        watch->queue_.push_back(event);
        break;
      }
    }
  }
  if (any_expired) {
    std::erase_if(watchers_, [](const auto& w) { return w.expired(); });
  }
}

std::vector<std::pair<std::string, njson>> KeyValueStore::list_prefix(
    const std::string& prefix) const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<std::string, njson>> out;
  for (auto it = data_.lower_bound(prefix); it != data_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    if (prefix_matches(it->first, prefix)) out.emplace_back(it->first, it->second);
  }
  return out;
}

njson KeyValueStore::dump() const {
  std::lock_guard lock(mu_);
  njson out = njson::object();
  for (const auto& [k, v] : data_) out[k] = v;
  return out;
}

void KeyValueStore::load(const njson& state) {
  std::lock_guard lock(mu_);
  data_.clear();
  for (const auto& [k, v] : state.items()) data_[k] = v;
}

// --- epoch application -------------------------------------------------------

namespace {

std::string link_key(const std::string& node, const std::string& peer) {
  return "/config/links/" + node + "/vl_" + peer;
}

}  // namespace

MutationSummary apply_epoch(KeyValueStore& store, const scenario::EpochFile& file,
                            const scenario::QuantizationPolicy& q,
                            const std::string& file_name) {
  MutationSummary summary;
  auto node_known = [&](const std::string& node) {
    return store.get("/config/nodes/" + node).has_value();
  };
  auto check_nodes = [&](const std::string& e1, const std::string& e2,
                         const std::string& what) {
    for (const auto& node : {e1, e2}) {
      if (!node_known(node)) {
        summary.rejected.push_back({what + " " + e1 + "-" + e2,
                                    "unknown node " + node});
        return false;
      }
    }
    return true;
  };

  for (const auto& [e1, e2] : file.links_del) {
    if (!check_nodes(e1, e2, "links-del")) continue;
    bool erased = store.erase(link_key(e1, e2));
    store.erase(link_key(e2, e1));
    if (erased) {
      ++summary.links_deleted;
    } else {
      summary.rejected.push_back({"links-del " + e1 + "-" + e2, "link not present"});
    }
  }

  auto upsert = [&](const scenario::LinkRecord& rec, bool is_add) {
    if (!check_nodes(rec.endpoint1, rec.endpoint2,
                     is_add ? "links-add" : "links-update")) {
      return;
    }
    njson value = scenario::link_value_json(rec, q);
    bool existed = store.get(link_key(rec.endpoint1, rec.endpoint2)).has_value();
    bool changed = store.put(link_key(rec.endpoint1, rec.endpoint2), value);
    store.put(link_key(rec.endpoint2, rec.endpoint1), value);
    if (!existed) {
      ++summary.links_added;
    } else if (changed) {
      ++summary.links_updated;  // idempotent adds become no-change updates
    }
  };
  for (const auto& rec : file.links_update) upsert(rec, false);
  for (const auto& rec : file.links_add) upsert(rec, true);

  for (const auto& [node, tasks] : file.run) {
    if (!node_known(node)) {
      summary.rejected.push_back({"run " + node, "unknown node " + node});
      continue;
    }
    store.put("/config/run/" + node, njson(tasks));
    summary.tasks_written += static_cast<int>(tasks.size());
  }

  store.put("/config/epoch-config",
            njson{{"epoch-time", util::format_iso8601(file.time_unix)},
                  {"epoch-file", file_name}});
  return summary;
}

// --- epoch replay ---------------------------------------------------------------

DirectoryEpochSource::DirectoryEpochSource(const std::string& dir,
                                           const std::string& pattern)
    : paths_(scenario::list_epoch_files(dir, pattern)) {}

std::optional<std::pair<scenario::EpochFile, std::string>>
DirectoryEpochSource::next() {
  if (index_ >= paths_.size()) return std::nullopt;
  const std::string& path = paths_[index_++];
  std::string name = path.substr(path.find_last_of('/') + 1);
  return std::make_pair(scenario::load_epoch_file(path), name);
}

void QueueEpochSource::push(scenario::EpochFile file, std::string name) {
  {
    std::lock_guard lock(mu_);
    queue_.emplace_back(std::move(file), std::move(name));
  }
  cv_.notify_one();
}

void QueueEpochSource::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::optional<std::pair<scenario::EpochFile, std::string>> QueueEpochSource::next() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto item = std::move(queue_.front());
  queue_.pop_front();
  return item;
}

void run_epochs(KeyValueStore& store, EpochSource& source,
                const scenario::QuantizationPolicy& q, double time_scale,
                SimClock* clock,
                const std::function<void(const scenario::EpochFile&,
                                         const MutationSummary&)>& on_applied) {
  std::optional<int64_t> last_time;
  while (auto item = source.next()) {
    const auto& [file, name] = *item;
    if (last_time && time_scale > 0) {
      double gap = static_cast<double>(file.time_unix - *last_time) * time_scale;
      if (gap > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(gap));
      }
    }
    last_time = file.time_unix;
    auto summary = apply_epoch(store, file, q, name);
    if (clock) {
      if (clock->start_unix == 0) clock->start_unix = file.time_unix;
      clock->now_s = static_cast<double>(file.time_unix - clock->start_unix);
    }
    if (on_applied) on_applied(file, summary);
  }
}

// --- node agents ------------------------------------------------------------------

NodeAgent::NodeAgent(std::string name, KeyValueStore& store,
                     std::shared_ptr<routing::RoutePlugin> plugin,
                     const routing::NameResolver* names)
    : name_(std::move(name)), plugin_(std::move(plugin)), names_(names) {
  watch_ = store.watch_prefixes(
      {"/config/links/" + name_ + "/", "/config/run/" + name_});
}

int NodeAgent::plugin_calls(routing::LinkEvent::Kind kind) const {
  switch (kind) {
    case routing::LinkEvent::Kind::Add:
      return add_calls_;
    case routing::LinkEvent::Kind::Update:
      return update_calls_;
    case routing::LinkEvent::Kind::Del:
      return del_calls_;
  }
  return 0;
}

void NodeAgent::drain_events() {
  while (auto event = watch_->poll()) {
    handle_event(*event);
  }
}

void NodeAgent::apply_mutations(const std::vector<routing::RouteMutation>& mutations) {
  for (const auto& m : mutations) {
    if (m.kind == routing::RouteMutation::Kind::Replace) {
      routes_.replace(m.entry);
    } else {
      routes_.remove(m.entry.destination, m.entry.origin);
    }
  }
}

void NodeAgent::handle_event(const WatchEvent& event) {
  const std::string link_prefix = "/config/links/" + name_ + "/vl_";
  if (event.key.rfind(link_prefix, 0) == 0) {
    const std::string peer = event.key.substr(link_prefix.size());
    routing::LinkEvent ev;
    ev.node = name_;
    ev.peer = peer;
    if (event.is_delete()) {
      ev.kind = routing::LinkEvent::Kind::Del;
      auto it = link_table_.find(peer);
      if (it != link_table_.end()) {
        ev.attrs = it->second;
        link_table_.erase(it);
      }
      ++del_calls_;
      if (plugin_) apply_mutations(plugin_->on_link_del(ev, *names_));
    } else {
      ev.attrs = scenario::parse_link_attrs(event.new_value);
      bool known = link_table_.contains(peer);
      link_table_[peer] = ev.attrs;
      if (known) {
        ev.kind = routing::LinkEvent::Kind::Update;
        ++update_calls_;
        if (plugin_) apply_mutations(plugin_->on_link_update(ev, *names_));
      } else {
        ev.kind = routing::LinkEvent::Kind::Add;
        ++add_calls_;
        if (plugin_) apply_mutations(plugin_->on_link_add(ev, *names_));
      }
    }
    return;
  }

  if (event.key == "/config/run/" + name_ && event.is_put()) {
    for (const auto& cmd : event.new_value) {
      TaskLogEntry entry;
      entry.command = cmd.get<std::string>();
      auto task = routing::parse_route_task(entry.command, *names_);
      entry.recognized = task.has_value();
      if (task) {
        routes_.replace({task->destination, task->next_hop,
                         routing::RouteOrigin::Oracle});
      }
      task_log_.push_back(std::move(entry));
    }
  }
}

}  // namespace statestore
}  // namespace nsb
