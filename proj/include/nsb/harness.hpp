#ifndef NSB_HARNESS_HPP
#define NSB_HARNESS_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsb/placement.hpp"
#include "nsb/scenario.hpp"
#include "nsb/srv6.hpp"
#include "nsb/statestore.hpp"

namespace nsb {
namespace harness {

// Everything derived from a scenario directory: the sat-config, the parsed
// generator echo, merged node configs, deterministic address plan, and the
// node kind map.
struct ScenarioRuntime {
  std::string dir;
  njson sat_config;
  scenario::GeneratorConfig gen;
  orbit::ConstellationState constellation;
  std::vector<std::pair<std::string, njson>> merged_nodes;  // file order
  scenario::AddressPlan addresses;
  routing::NameResolver names;
  std::map<std::string, routing::NodeKind> kinds;
  std::map<std::string, orbit::GroundNode> ground_by_name;
  std::map<std::string, int> sat_flat_by_name;
  std::string epoch_dir;
  std::string file_pattern;

  std::vector<std::string> epoch_paths() const;
};

ScenarioRuntime load_scenario(const std::string& dir);

// Writes node configs, etchosts entries, and (optionally) workers plus the
// placement-assigned worker field into the store.
void populate_store(const ScenarioRuntime& rt, statestore::KeyValueStore& store,
                    const std::map<std::string, std::string>* worker_of_node = nullptr,
                    const njson* workers_json = nullptr);

// Full generation pipeline: scenario plus oracle route injection.
struct GenerateStats {
  int satellites = 0;
  int epoch_files = 0;
  size_t oracle_tasks = 0;
  size_t reachability_gaps = 0;
};
GenerateStats generate_scenario_dir(const njson& generator_config,
                                    const std::string& out_dir);

// --- experiment -----------------------------------------------------------

struct SessionSpec {
  std::string user, gateway;
};

struct ExperimentConfig {
  std::string scenario_dir;
  srv6::HandoverConfig handover;
  double duration_s = 0;  // 0 -> scenario duration
  double probe_period_ms = 10.0;
  uint64_t seed = 1;
  bool loss_enabled = true;
  std::vector<SessionSpec> sessions;  // empty -> every user, closest gateway
  bool verify_traces = false;
};

// "local-min-delay" or "e2e:1,2,4"
srv6::HandoverConfig parse_strategy(const std::string& text);

struct ProbeSample {
  double send_t = 0;
  double rtt_ms = -1;  // invalid when lost
  bool lost = false;
  int hops = 0;  // links on the user->gateway path
  std::string uss, gss;
};

struct ProbeTrace {
  std::string user, gateway;
  std::vector<ProbeSample> samples;
};

struct ExperimentResult {
  std::vector<ProbeTrace> traces;   // sorted by user name
  std::vector<njson> handover_log;  // sorted by (t, session)
  njson summary;
  njson final_store;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string traces_csv(const std::vector<ProbeTrace>& traces);
void write_outputs(const ExperimentResult& result, const std::string& out_dir);

int cli_main(int argc, char** argv);

}  // namespace harness
}  // namespace nsb

#endif
