#ifndef NSB_PLACEMENT_HPP
#define NSB_PLACEMENT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nsb/json.hpp"
#include "nsb/scenario.hpp"

namespace nsb {
namespace placement {

struct WorkerSpec {
  std::string name;
  double cpu_capacity = 0;
  uint64_t mem_capacity = 0;
  std::string underlay_ip;
};

std::vector<WorkerSpec> parse_workers(const njson& j);

struct VertexDemand {
  double cpu = 0;
  uint64_t mem = 0;
};

using EdgeWeights = std::map<std::pair<std::string, std::string>, int64_t>;

struct PlacementGraph {
  std::map<std::string, VertexDemand> vertices;
  EdgeWeights edges;  // canonical (a < b) name pairs, weight >= 1
};

// Weight of each link = number of epochs in which it is active (adds count
// from their epoch, deletions stop the count).
EdgeWeights link_activity_weights(const std::vector<scenario::EpochFile>& files);

struct PlacementResult {
  std::map<std::string, std::string> assignment;  // node -> worker
  int parts_used = 0;
  int64_t cut_weight = 0;
};

int64_t cut_weight(const PlacementGraph& graph,
                   const std::map<std::string, std::string>& assignment);

// Iterative growth: the partition count starts at 1 and increases until the
// per-part resource requests fit the matched workers (largest part to the
// largest worker). Each count is partitioned by seeded recursive bisection
// with local refinement. Throws ConfigError when even |workers| parts do
// not fit, reporting the per-worker shortfall.
PlacementResult partition(const PlacementGraph& graph,
                          const std::vector<WorkerSpec>& workers, uint64_t seed);

}  // namespace placement
}  // namespace nsb

#endif
