#include "nsb/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "nsb/util.hpp"

namespace nsb {
namespace routing {

std::optional<std::string> NameResolver::loopback(const std::string& name) const {
  auto it = loopback_by_name.find(name);
  if (it == loopback_by_name.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> NameResolver::name(const std::string& loopback) const {
  auto it = name_by_loopback.find(loopback);
  if (it == name_by_loopback.end()) return std::nullopt;
  return it->second;
}

void RouteTable::replace(const RouteEntry& entry) {
  entries_[{entry.destination, static_cast<int>(entry.origin)}] = entry;
}

void RouteTable::remove(const std::string& destination, RouteOrigin origin) {
  entries_.erase({destination, static_cast<int>(origin)});
}

std::optional<RouteEntry> RouteTable::lookup(const std::string& destination,
                                             RouteOrigin origin) const {
  auto it = entries_.find({destination, static_cast<int>(origin)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<RouteMutation> LocalRoutesPlugin::on_link_add(
    const LinkEvent& ev, const NameResolver& names) {
  auto loopback = names.loopback(ev.peer);
  if (!loopback) return {};
  RouteMutation m;
  m.kind = RouteMutation::Kind::Replace;
  m.entry = {*loopback, ev.peer, RouteOrigin::Local};
  return {m};
}

std::vector<RouteMutation> LocalRoutesPlugin::on_link_update(const LinkEvent&,
                                                             const NameResolver&) {
  return {};  // attribute changes do not move routes
}

std::vector<RouteMutation> LocalRoutesPlugin::on_link_del(
    const LinkEvent& ev, const NameResolver& names) {
  auto loopback = names.loopback(ev.peer);
  if (!loopback) return {};
  RouteMutation m;
  m.kind = RouteMutation::Kind::Remove;
  m.entry = {*loopback, ev.peer, RouteOrigin::Local};
  return {m};
}

std::shared_ptr<RoutePlugin> make_plugin(const std::string& module_name) {
  if (module_name == "extra.routing.local6" || module_name == "local6" ||
      module_name == "local") {
    return std::make_shared<LocalRoutesPlugin>();
  }
  return nullptr;
}

std::optional<RouteTask> parse_route_task(const std::string& command,
                                          const NameResolver& names) {
  std::istringstream in(command);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  size_t i = 0;
  if (i < tokens.size() && tokens[i] == "ip") ++i;
  if (i < tokens.size() && (tokens[i] == "-6" || tokens[i] == "-4")) ++i;
  if (i + 3 >= tokens.size()) return std::nullopt;
  if (tokens[i] != "route" || tokens[i + 1] != "replace") return std::nullopt;
  std::string dst = tokens[i + 2];
  if (tokens[i + 3] != "via" || i + 4 >= tokens.size()) return std::nullopt;
  std::string nh = tokens[i + 4];
  RouteTask task;
  // destinations may be given by node name; normalize to the loopback
  if (auto lb = names.loopback(dst)) {
    task.destination = *lb;
  } else {
    task.destination = dst;
  }
  // next hops may be given by loopback; normalize to the node name
  if (auto nm = names.name(nh)) {
    task.next_hop = *nm;
  } else {
    task.next_hop = nh;
  }
  return task;
}

std::string format_route_task(const std::string& dst_loopback,
                              const std::string& next_hop) {
  return "route replace " + dst_loopback + " via " + next_hop;
}

PathResult resolve_path(const RouteLookup& lookup, const NameResolver& names,
                        const std::string& src, const std::string& dst) {
  PathResult result;
  result.nodes.push_back(src);
  if (src == dst) return result;
  auto dst_loopback = names.loopback(dst);
  if (!dst_loopback) {
    result.error = PathResult::Error::NoRoute;
    result.detail = "unknown destination node " + dst;
    return result;
  }
  std::set<std::string> visited{src};
  std::string current = src;
  while (current != dst) {
    auto nh = lookup.next_hop(current, *dst_loopback);
    if (!nh) {
      result.error = PathResult::Error::NoRoute;
      result.detail = "no route at " + current + " toward " + dst;
      return result;
    }
    result.nodes.push_back(*nh);
    if (!visited.insert(*nh).second) {
      result.error = PathResult::Error::Loop;
      std::string cycle;
      for (const auto& n : result.nodes) cycle += (cycle.empty() ? "" : " -> ") + n;
      result.detail = "routing loop: " + cycle;
      return result;
    }
    current = *nh;
  }
  return result;
}

OracleConfig parse_oracle_config(const njson& j, double epoch_interval_s) {
  OracleConfig cfg;
  if (j.is_null()) return cfg;
  std::string metric = j.value("metric", std::string("hop-count"));
  if (metric == "hop-count") {
    cfg.metric = Metric::HopCount;
  } else if (metric == "prop-delay") {
    cfg.metric = Metric::PropagationDelay;
  } else {
    throw ConfigError("oracle metric must be hop-count or prop-delay");
  }
  cfg.drain_lead_s = j.value("drain_lead_s", epoch_interval_s);
  if (cfg.drain_lead_s < 0) throw ConfigError("drain_lead_s must be >= 0");
  double ratio = cfg.drain_lead_s / epoch_interval_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ConfigError("drain_lead_s must be a multiple of the epoch interval");
  }
  if (j.contains("pair_classes")) {
    cfg.pair_classes.clear();
    auto parse_kind = [](const std::string& s) {
      if (s == "satellite") return NodeKind::Satellite;
      if (s == "gateway") return NodeKind::Gateway;
      if (s == "user") return NodeKind::User;
      throw ConfigError("unknown node class '" + s + "'");
    };
    for (const auto& pair : j["pair_classes"]) {
      cfg.pair_classes.emplace_back(parse_kind(pair.at(0).get<std::string>()),
                                    parse_kind(pair.at(1).get<std::string>()));
    }
  }
  return cfg;
}

OracleResult oracle_compute(std::vector<scenario::EpochFile> files,
                            const std::map<std::string, NodeKind>& kinds,
                            const NameResolver& names, const OracleConfig& cfg,
                            double epoch_interval_s) {
  OracleResult result;
  const int n = static_cast<int>(files.size());
  const int drain_epochs =
      static_cast<int>(std::llround(cfg.drain_lead_s / epoch_interval_s));
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // users never carry infrastructure routes; intern everything else.
  // kinds is name-sorted, so index order doubles as lexicographic order.
  std::vector<std::string> node_names;
  std::vector<NodeKind> node_kinds;
  std::map<std::string, int> index_of;
  for (const auto& [name, kind] : kinds) {
    if (kind == NodeKind::User) continue;
    index_of[name] = static_cast<int>(node_names.size());
    node_names.push_back(name);
    node_kinds.push_back(kind);
  }
  const int nv = static_cast<int>(node_names.size());

  std::set<NodeKind> dst_kinds;
  for (const auto& [s, d] : cfg.pair_classes) dst_kinds.insert(d);
  auto in_class = [&](NodeKind s, NodeKind d) {
    return std::find(cfg.pair_classes.begin(), cfg.pair_classes.end(),
                     std::make_pair(s, d)) != cfg.pair_classes.end();
  };

  scenario::LinkSet alive;
  std::vector<int> prev_next_hop(static_cast<size_t>(nv) * nv, -1);
  std::vector<double> dist(nv);
  using HeapItem = std::pair<double, int>;

  for (int k = 0; k < n; ++k) {
    scenario::apply_epoch_to_linkset(alive, files[k]);

    // drain-before-break: drop links scheduled for deletion within the lead
    std::set<scenario::LinkKey> draining;
    for (int j = k + 1; j <= k + drain_epochs && j < n; ++j) {
      for (const auto& [e1, e2] : files[j].links_del) {
        draining.insert(scenario::LinkKey(e1, e2));
      }
    }

    std::vector<std::vector<std::pair<int, double>>> adj(nv);
    for (const auto& [key, rec] : alive) {
      if (draining.contains(key)) continue;
      auto i1 = index_of.find(rec.endpoint1);
      auto i2 = index_of.find(rec.endpoint2);
      if (i1 == index_of.end() || i2 == index_of.end()) continue;
      double w = cfg.metric == Metric::HopCount
                     ? 1.0
                     : std::max(rec.attrs.delay_ms, 1e-9);
      adj[i1->second].emplace_back(i2->second, w);
      adj[i2->second].emplace_back(i1->second, w);
    }
    for (auto& peers : adj) std::sort(peers.begin(), peers.end());

    for (int dst = 0; dst < nv; ++dst) {
      if (!dst_kinds.contains(node_kinds[dst])) continue;
      auto dst_loopback = names.loopback(node_names[dst]);
      if (!dst_loopback) continue;

      // shortest paths from dst; only satellites (or dst itself) relay
      std::fill(dist.begin(), dist.end(), kInf);
      std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
      dist[dst] = 0.0;
      heap.push({0.0, dst});
      while (!heap.empty()) {
        auto [d, node] = heap.top();
        heap.pop();
        if (d > dist[node]) continue;
        if (node != dst && node_kinds[node] != NodeKind::Satellite) continue;
        for (const auto& [peer, w] : adj[node]) {
          double nd = d + w;
          if (nd < dist[peer] - 1e-12) {
            dist[peer] = nd;
            heap.push({nd, peer});
          }
        }
      }

      for (int src = 0; src < nv; ++src) {
        if (src == dst || !in_class(node_kinds[src], node_kinds[dst])) continue;
        int best_peer = -1;
        double best_cost = kInf;
        for (const auto& [peer, w] : adj[src]) {
          if (peer != dst && node_kinds[peer] != NodeKind::Satellite) continue;
          if (dist[peer] == kInf) continue;
          double cost = w + dist[peer];
          // ascending index == ascending name, so strict improvement keeps
          // the lexicographically smallest tie
          if (cost < best_cost - 1e-12) {
            best_cost = cost;
            best_peer = peer;
          }
        }
        if (best_peer < 0) {
          result.gaps.push_back({k, node_names[src], node_names[dst]});
          continue;
        }
        int& prev = prev_next_hop[static_cast<size_t>(src) * nv + dst];
        if (prev != best_peer) {
          files[k].run[node_names[src]].push_back(
              format_route_task(*dst_loopback, node_names[best_peer]));
          prev = best_peer;
          ++result.tasks_emitted;
        }
      }
    }
  }
  result.files = std::move(files);
  return result;
}

}  // namespace routing
}  // namespace nsb
