#include "nsb/placement.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "nsb/util.hpp"

namespace nsb {
namespace placement {

std::vector<WorkerSpec> parse_workers(const njson& j) {
  const njson& map = j.contains("workers") ? j["workers"] : j;
  std::vector<WorkerSpec> workers;
  for (const auto& [name, spec] : map.items()) {
    WorkerSpec w;
    w.name = name;
    const njson& cpu = spec.at("cpu");
    w.cpu_capacity = cpu.is_string()
                         ? util::parse_cpu_quantity(cpu.get<std::string>())
                         : cpu.get<double>();
    const njson& mem = spec.at("mem");
    w.mem_capacity = mem.is_string()
                         ? util::parse_mem_quantity(mem.get<std::string>())
                         : mem.get<uint64_t>();
    w.underlay_ip = spec.value("ip", std::string());
    if (w.cpu_capacity <= 0 || w.mem_capacity == 0) {
      throw ConfigError("worker " + name + ": capacities must be > 0");
    }
    workers.push_back(std::move(w));
  }
  if (workers.empty()) throw ConfigError("no workers configured");
  return workers;
}

EdgeWeights link_activity_weights(const std::vector<scenario::EpochFile>& files) {
  EdgeWeights weights;
  scenario::LinkSet alive;
  for (const auto& file : files) {
    scenario::apply_epoch_to_linkset(alive, file);
    for (const auto& [key, rec] : alive) {
      ++weights[{key.a, key.b}];
    }
  }
  return weights;
}

int64_t cut_weight(const PlacementGraph& graph,
                   const std::map<std::string, std::string>& assignment) {
  int64_t cut = 0;
  for (const auto& [edge, w] : graph.edges) {
    auto a = assignment.find(edge.first);
    auto b = assignment.find(edge.second);
    if (a != assignment.end() && b != assignment.end() && a->second != b->second) {
      cut += w;
    }
  }
  return cut;
}

namespace {

struct Instance {
  std::vector<std::string> names;                       // sorted
  std::vector<double> cpu;                              // per vertex
  std::vector<uint64_t> mem;
  std::vector<std::vector<std::pair<int, int64_t>>> adj;  // (peer, weight)
};

Instance build_instance(const PlacementGraph& graph) {
  Instance inst;
  std::map<std::string, int> index;
  for (const auto& [name, demand] : graph.vertices) {
    index[name] = static_cast<int>(inst.names.size());
    inst.names.push_back(name);
    inst.cpu.push_back(demand.cpu);
    inst.mem.push_back(demand.mem);
  }
  inst.adj.resize(inst.names.size());
  for (const auto& [edge, w] : graph.edges) {
    auto a = index.find(edge.first);
    auto b = index.find(edge.second);
    if (a == index.end() || b == index.end()) {
      throw ConfigError("edge endpoint missing from vertex set: " + edge.first +
                        "-" + edge.second);
    }
    inst.adj[a->second].emplace_back(b->second, w);
    inst.adj[b->second].emplace_back(a->second, w);
  }
  return inst;
}

// cut change if v moved to the other side
int64_t move_gain(const Instance& inst, const std::vector<int>& side,
                  const std::vector<char>& in_set, int v) {
  int64_t gain = 0;
  for (const auto& [peer, w] : inst.adj[v]) {
    if (!in_set[peer]) continue;
    gain += side[peer] == side[v] ? -w : w;
  }
  return gain;
}

// Fiduccia-Mattheyses style single-move refinement of a bipartition.
// target_a is the cpu weight wanted on side 0; a relative imbalance band
// keeps moves from starving either side.
void refine_bisection(const Instance& inst, const std::vector<int>& vertices,
                      std::vector<int>& side, double target_a, double total_cpu) {
  std::vector<char> in_set(inst.names.size(), 0);
  for (int v : vertices) in_set[v] = 1;
  const double tol = 0.15;
  const double min_a = std::max(0.0, target_a - tol * total_cpu);
  const double max_a = std::min(total_cpu, target_a + tol * total_cpu);

  double cpu_a = 0;
  for (int v : vertices) {
    if (side[v] == 0) cpu_a += inst.cpu[v];
  }

  for (int pass = 0; pass < 8; ++pass) {
    std::vector<char> locked(inst.names.size(), 0);
    struct Step {
      int vertex;
      int64_t gain;
    };
    std::vector<Step> steps;
    int64_t running = 0, best_prefix_gain = 0;
    int best_prefix = 0;
    double cur_a = cpu_a;

    for (size_t moves = 0; moves < vertices.size(); ++moves) {
      int best_v = -1;
      int64_t best_gain = 0;
      for (int v : vertices) {
        if (locked[v]) continue;
        double next_a = side[v] == 0 ? cur_a - inst.cpu[v] : cur_a + inst.cpu[v];
        if (next_a < min_a || next_a > max_a) continue;
        int64_t gain = move_gain(inst, side, in_set, v);
        if (best_v < 0 || gain > best_gain) {
          best_v = v;
          best_gain = gain;
        }
      }
      if (best_v < 0) break;
      cur_a = side[best_v] == 0 ? cur_a - inst.cpu[best_v] : cur_a + inst.cpu[best_v];
      side[best_v] = 1 - side[best_v];
      locked[best_v] = 1;
      running += best_gain;
      steps.push_back({best_v, best_gain});
      if (running > best_prefix_gain) {
        best_prefix_gain = running;
        best_prefix = static_cast<int>(steps.size());
      }
    }
    // roll back moves beyond the best prefix
    for (int i = static_cast<int>(steps.size()) - 1; i >= best_prefix; --i) {
      int v = steps[i].vertex;
      side[v] = 1 - side[v];
    }
    cpu_a = 0;
    for (int v : vertices) {
      if (side[v] == 0) cpu_a += inst.cpu[v];
    }
    if (best_prefix_gain <= 0) break;
  }
}

int64_t bisection_cut(const Instance& inst, const std::vector<int>& vertices,
                      const std::vector<int>& side) {
  std::vector<char> in_set(inst.names.size(), 0);
  for (int v : vertices) in_set[v] = 1;
  int64_t cut = 0;
  for (int v : vertices) {
    for (const auto& [peer, w] : inst.adj[v]) {
      if (in_set[peer] && peer > v && side[peer] != side[v]) cut += w;
    }
  }
  return cut;
}

// Splits `vertices` into two sets with cpu weights close to frac_a:1-frac_a,
// trying several seeded starts and keeping the smallest refined cut.
std::pair<std::vector<int>, std::vector<int>> bisect(
    const Instance& inst, std::vector<int> vertices, double frac_a,
    std::mt19937_64& rng) {
  double total_cpu = 0;
  for (int v : vertices) total_cpu += inst.cpu[v];
  const double target_a = frac_a * total_cpu;

  std::vector<int> best_side;
  int64_t best_cut = -1;
  const int restarts = 6;
  for (int r = 0; r < restarts; ++r) {
    std::vector<int> side(inst.names.size(), 1);
    std::vector<char> in_set(inst.names.size(), 0);
    for (int v : vertices) in_set[v] = 1;

    // region growing from a random start vertex until side 0 reaches target
    std::vector<int> order = vertices;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> frontier{order[0]};
    std::vector<char> seen(inst.names.size(), 0);
    seen[order[0]] = 1;
    double cpu_a = 0;
    size_t next_seed = 1;
    while (cpu_a < target_a) {
      int v = -1;
      if (!frontier.empty()) {
        v = frontier.back();
        frontier.pop_back();
      } else {
        while (next_seed < order.size() && seen[order[next_seed]]) ++next_seed;
        if (next_seed >= order.size()) break;
        v = order[next_seed];
        seen[v] = 1;
      }
      if (side[v] == 0) continue;
      if (cpu_a + inst.cpu[v] > target_a + 0.5 * inst.cpu[v] && cpu_a > 0) continue;
      side[v] = 0;
      cpu_a += inst.cpu[v];
      for (const auto& [peer, w] : inst.adj[v]) {
        (void)w;
        if (in_set[peer] && !seen[peer]) {
          seen[peer] = 1;
          frontier.push_back(peer);
        }
      }
    }

    refine_bisection(inst, vertices, side, target_a, total_cpu);
    int64_t cut = bisection_cut(inst, vertices, side);
    if (best_cut < 0 || cut < best_cut) {
      best_cut = cut;
      best_side = side;
    }
  }

  std::vector<int> a, b;
  for (int v : vertices) {
    (best_side[v] == 0 ? a : b).push_back(v);
  }
  if (a.empty() || b.empty()) {
    // degenerate split; force a minimal one for progress
    std::vector<int> all = vertices;
    std::sort(all.begin(), all.end());
    a.assign(all.begin(), all.begin() + all.size() / 2);
    b.assign(all.begin() + all.size() / 2, all.end());
  }
  return {a, b};
}

void recursive_partition(const Instance& inst, std::vector<int> vertices, int k,
                         int first_part, std::vector<int>& part,
                         std::mt19937_64& rng) {
  if (k == 1) {
    for (int v : vertices) part[v] = first_part;
    return;
  }
  int k1 = (k + 1) / 2;
  int k2 = k - k1;
  auto [a, b] = bisect(inst, std::move(vertices),
                       static_cast<double>(k1) / (k1 + k2), rng);
  recursive_partition(inst, std::move(a), k1, first_part, part, rng);
  recursive_partition(inst, std::move(b), k2, first_part + k1, part, rng);
}

std::vector<int> round_robin_parts(const Instance& inst, int k) {
  std::vector<int> part(inst.names.size());
  for (size_t i = 0; i < inst.names.size(); ++i) {
    part[i] = static_cast<int>(i) % k;
  }
  return part;
}

int64_t parts_cut(const Instance& inst, const std::vector<int>& part) {
  int64_t cut = 0;
  for (size_t v = 0; v < inst.adj.size(); ++v) {
    for (const auto& [peer, w] : inst.adj[v]) {
      if (peer > static_cast<int>(v) && part[peer] != part[v]) cut += w;
    }
  }
  return cut;
}

// largest part to largest worker; nullopt when some part does not fit
std::optional<std::map<std::string, std::string>> match_parts_to_workers(
    const Instance& inst, const std::vector<int>& part, int k,
    const std::vector<WorkerSpec>& workers, std::string* shortfall) {
  struct PartLoad {
    int id;
    double cpu = 0;
    uint64_t mem = 0;
  };
  std::vector<PartLoad> loads(k);
  for (int p = 0; p < k; ++p) loads[p].id = p;
  for (size_t v = 0; v < inst.names.size(); ++v) {
    loads[part[v]].cpu += inst.cpu[v];
    loads[part[v]].mem += inst.mem[v];
  }
  std::sort(loads.begin(), loads.end(),
            [](const PartLoad& a, const PartLoad& b) { return a.cpu > b.cpu; });
  std::vector<WorkerSpec> sorted = workers;
  std::sort(sorted.begin(), sorted.end(),
            [](const WorkerSpec& a, const WorkerSpec& b) {
              if (a.cpu_capacity != b.cpu_capacity)
                return a.cpu_capacity > b.cpu_capacity;
              return a.name < b.name;
            });
  std::string report;
  bool ok = true;
  std::vector<std::string> worker_of_part(k);
  for (int i = 0; i < k; ++i) {
    const auto& w = sorted[i];
    const auto& load = loads[i];
    if (load.cpu > w.cpu_capacity || load.mem > w.mem_capacity) {
      ok = false;
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "%s: cpu %.3f/%.3f cores, mem %.1f/%.1f MiB\n",
                    w.name.c_str(), load.cpu, w.cpu_capacity,
                    load.mem / 1048576.0, w.mem_capacity / 1048576.0);
      report += buf;
    }
    worker_of_part[load.id] = w.name;
  }
  if (!ok) {
    if (shortfall) *shortfall = report;
    return std::nullopt;
  }
  std::map<std::string, std::string> assignment;
  for (size_t v = 0; v < inst.names.size(); ++v) {
    assignment[inst.names[v]] = worker_of_part[part[v]];
  }
  return assignment;
}

}  // namespace

PlacementResult partition(const PlacementGraph& graph,
                          const std::vector<WorkerSpec>& workers, uint64_t seed) {
  if (graph.vertices.empty()) throw ConfigError("placement graph has no vertices");
  Instance inst = build_instance(graph);
  std::string last_shortfall;

  for (int k = 1; k <= static_cast<int>(workers.size()); ++k) {
    std::mt19937_64 rng(seed + static_cast<uint64_t>(k) * 7919);
    std::vector<int> part(inst.names.size(), 0);
    std::vector<int> all(inst.names.size());
    std::iota(all.begin(), all.end(), 0);
    recursive_partition(inst, all, k, 0, part, rng);

    // never worse than naive striping: keep whichever feasible candidate cuts less
    std::vector<int> rr = round_robin_parts(inst, k);
    struct Candidate {
      std::vector<int>* part;
      int64_t cut;
    };
    std::vector<Candidate> candidates{{&part, parts_cut(inst, part)},
                                      {&rr, parts_cut(inst, rr)}};
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.cut < b.cut; });
    for (const auto& cand : candidates) {
      auto assignment =
          match_parts_to_workers(inst, *cand.part, k, workers, &last_shortfall);
      if (assignment) {
        PlacementResult result;
        result.assignment = std::move(*assignment);
        result.parts_used = k;
        result.cut_weight = cand.cut;
        return result;
      }
    }
  }
  throw ConfigError(
      "placement infeasible even with " + std::to_string(workers.size()) +
      " partitions; per-worker shortfall:\n" + last_shortfall);
}

}  // namespace placement
}  // namespace nsb
