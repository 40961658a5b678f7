#ifndef NSB_SCENARIO_HPP
#define NSB_SCENARIO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nsb/cidr.hpp"
#include "nsb/json.hpp"
#include "nsb/linkmodel.hpp"
#include "nsb/orbit.hpp"

namespace nsb {
namespace scenario {

struct QuantizationPolicy {
  double delay_quantum_ms = 1.0;
  double rate_quantum_mbps = 1.0;
  double epoch_interval_s = 5.0;
};

double quantize(double value, double quantum);

// Unordered endpoint pair; the canonical key for a link.
struct LinkKey {
  std::string a, b;  // a <= b

  LinkKey() = default;
  LinkKey(std::string e1, std::string e2);
  auto operator<=>(const LinkKey&) const = default;
};

struct LinkRecord {
  std::string endpoint1, endpoint2;
  linkmodel::LinkAttributes attrs;
};

using LinkSet = std::map<LinkKey, LinkRecord>;

struct EpochFile {
  int64_t time_unix = 0;
  std::vector<std::pair<std::string, std::string>> links_del;
  std::vector<LinkRecord> links_update;
  std::vector<LinkRecord> links_add;
  std::map<std::string, std::vector<std::string>> run;
};

// Serialized store/epoch value for one link, attributes quantized and
// rendered as listing-style strings ("400.0mbit", "3.0ms", loss in percent).
njson link_value_json(const LinkRecord& rec, const QuantizationPolicy& q);
linkmodel::LinkAttributes parse_link_attrs(const njson& value);

njson epoch_to_json(const EpochFile& file, const QuantizationPolicy& q);
EpochFile epoch_from_json(const njson& j);

// Replays one epoch file onto a link set (used by round-trip checks and
// the placement weight scan).
void apply_epoch_to_linkset(LinkSet& links, const EpochFile& file);

// Per-link adds/dels/updates between two snapshots; an update is emitted
// only when the quantized serialization of the attributes differs.
EpochFile diff_snapshots(const LinkSet& prev, const LinkSet& next,
                         const QuantizationPolicy& q, int64_t time_unix);

// --- node configuration -----------------------------------------------

struct MatchRule {
  std::string match_key, match_value;
  njson payload;  // "config-common" block
};

bool rule_matches(const MatchRule& rule, const njson& node_config);
std::vector<MatchRule> parse_match_rules(const njson& rules_json);

// Applies matching rules in list order, node-specific values winning over
// common ones; verifies the mandatory fields (type, image, cpu-request,
// mem-request) are resolved.
njson merge_common_config(const std::string& name, const njson& node_specific,
                          const std::vector<MatchRule>& common_rules);

struct AddressAssignment {
  cidr::Cidr subnet;
  std::string loopback;
};

struct AddressPlan {
  // family -> node -> assignment; "v6" and "v4"
  std::map<std::string, std::map<std::string, AddressAssignment>> families;

  std::optional<std::string> loopback6(const std::string& node) const;
};

// Carves consecutive equal-size subnets from each node's matching
// super-CIDR rule (L3-config / auto-assign-super-cidr); the loopback is the
// numerically last address of the slice.
AddressPlan assign_addresses(
    const std::vector<std::pair<std::string, njson>>& merged_nodes);

// --- scenario generation ------------------------------------------------

struct PhyConfig {
  double isl_rate_mbps = 400.0;
  double isl_loss_fraction = 0.0;
  std::string ground_rate_model = "slant-range";  // or "fixed"
  double ground_fixed_rate_mbps = 100.0;
  linkmodel::SlantRateParams gateway_params;
  linkmodel::SlantRateParams user_params;
  double access_loss_fraction = 0.0;
};

struct GeneratorConfig {
  int64_t start_unix = 0;
  double duration_s = 0;
  orbit::WalkerParams walker;
  std::vector<orbit::GroundNode> ground_nodes;
  double min_elevation_deg = 25.0;
  PhyConfig phy;
  QuantizationPolicy quant;
  njson node_config_common;  // optional override of the default blocks
  njson oracle;              // opaque here; consumed by the routing module
  njson raw;                 // original config, echoed into sat-config.json
};

GeneratorConfig parse_generator_config(const njson& j);

// Link set of one snapshot (raw, unquantized attributes).
LinkSet compute_snapshot(const GeneratorConfig& cfg,
                         const orbit::ConstellationState& constellation,
                         double t);

struct GeneratedScenario {
  njson sat_config;
  std::vector<EpochFile> epochs;
  orbit::ConstellationState constellation;
};

GeneratedScenario generate_scenario(const GeneratorConfig& cfg);

void write_scenario(const GeneratedScenario& scenario,
                    const QuantizationPolicy& q, const std::string& out_dir);

// --- scenario loading ----------------------------------------------------

njson load_json_file(const std::string& path);

// Epoch files under dir matching the "NetSatBench-epoch*.json" style
// pattern, sorted by the integer matched by '*'.
std::vector<std::string> list_epoch_files(const std::string& dir,
                                          const std::string& pattern);

EpochFile load_epoch_file(const std::string& path);

std::string epoch_file_name(const std::string& pattern, int index);

}  // namespace scenario
}  // namespace nsb

#endif
