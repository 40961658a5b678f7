#include "nsb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "nsb/util.hpp"

namespace nsb {
namespace scenario {

namespace fs = std::filesystem;

double quantize(double value, double quantum) {
  return std::round(value / quantum) * quantum;
}

LinkKey::LinkKey(std::string e1, std::string e2) {
  if (e2 < e1) std::swap(e1, e2);
  a = std::move(e1);
  b = std::move(e2);
}

njson link_value_json(const LinkRecord& rec, const QuantizationPolicy& q) {
  njson v;
  v["endpoint1"] = rec.endpoint1;
  v["endpoint2"] = rec.endpoint2;
  v["rate"] =
      util::format_fixed1(quantize(rec.attrs.rate_mbps, q.rate_quantum_mbps)) +
      "mbit";
  v["loss"] = util::format_fixed1(rec.attrs.loss_fraction * 100.0);
  v["delay"] =
      util::format_fixed1(quantize(rec.attrs.delay_ms, q.delay_quantum_ms)) +
      "ms";
  return v;
}

namespace {

double parse_suffixed(const std::string& text, const std::string& suffix) {
  if (text.size() >= suffix.size() &&
      text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return std::stod(text.substr(0, text.size() - suffix.size()));
  }
  return std::stod(text);
}

}  // namespace

linkmodel::LinkAttributes parse_link_attrs(const njson& value) {
  linkmodel::LinkAttributes attrs;
  if (value.contains("rate")) {
    attrs.rate_mbps = parse_suffixed(value["rate"].get<std::string>(), "mbit");
  }
  if (value.contains("delay")) {
    attrs.delay_ms = parse_suffixed(value["delay"].get<std::string>(), "ms");
  }
  if (value.contains("loss")) {
    const auto& loss = value["loss"];
    double percent = loss.is_string() ? std::stod(loss.get<std::string>())
                                      : loss.get<double>();
    attrs.loss_fraction = percent / 100.0;
  }
  return attrs;
}

njson epoch_to_json(const EpochFile& file, const QuantizationPolicy& q) {
  njson j;
  j["time"] = util::format_iso8601(file.time_unix);
  j["links-del"] = njson::array();
  for (const auto& [e1, e2] : file.links_del) {
    j["links-del"].push_back({{"endpoint1", e1}, {"endpoint2", e2}});
  }
  j["links-update"] = njson::array();
  for (const auto& rec : file.links_update) {
    j["links-update"].push_back(link_value_json(rec, q));
  }
  j["links-add"] = njson::array();
  for (const auto& rec : file.links_add) {
    j["links-add"].push_back(link_value_json(rec, q));
  }
  j["run"] = njson::object();
  for (const auto& [node, tasks] : file.run) {
    j["run"][node] = tasks;
  }
  return j;
}

EpochFile epoch_from_json(const njson& j) {
  EpochFile file;
  file.time_unix = util::parse_iso8601(j.at("time").get<std::string>());
  if (j.contains("links-del")) {
    for (const auto& e : j["links-del"]) {
      file.links_del.emplace_back(e.at("endpoint1").get<std::string>(),
                                  e.at("endpoint2").get<std::string>());
    }
  }
  auto read_records = [](const njson& arr, std::vector<LinkRecord>& out) {
    for (const auto& e : arr) {
      LinkRecord rec;
      rec.endpoint1 = e.at("endpoint1").get<std::string>();
      rec.endpoint2 = e.at("endpoint2").get<std::string>();
      rec.attrs = parse_link_attrs(e);
      out.push_back(std::move(rec));
    }
  };
  if (j.contains("links-update")) read_records(j["links-update"], file.links_update);
  if (j.contains("links-add")) read_records(j["links-add"], file.links_add);
  if (j.contains("run")) {
    for (const auto& [node, tasks] : j["run"].items()) {
      file.run[node] = tasks.get<std::vector<std::string>>();
    }
  }
  return file;
}

void apply_epoch_to_linkset(LinkSet& links, const EpochFile& file) {
  for (const auto& [e1, e2] : file.links_del) {
    links.erase(LinkKey(e1, e2));
  }
  for (const auto& rec : file.links_update) {
    links[LinkKey(rec.endpoint1, rec.endpoint2)] = rec;
  }
  for (const auto& rec : file.links_add) {
    links[LinkKey(rec.endpoint1, rec.endpoint2)] = rec;
  }
}

EpochFile diff_snapshots(const LinkSet& prev, const LinkSet& next,
                         const QuantizationPolicy& q, int64_t time_unix) {
  EpochFile file;
  file.time_unix = time_unix;
  for (const auto& [key, rec] : prev) {
    if (!next.contains(key)) {
      file.links_del.emplace_back(rec.endpoint1, rec.endpoint2);
    }
  }
  for (const auto& [key, rec] : next) {
    auto it = prev.find(key);
    if (it == prev.end()) {
      file.links_add.push_back(rec);
    } else if (link_value_json(it->second, q) != link_value_json(rec, q)) {
      file.links_update.push_back(rec);
    }
  }
  return file;
}

// --- node configuration ----------------------------------------------------

bool rule_matches(const MatchRule& rule, const njson& node_config) {
  if (!node_config.contains(rule.match_key)) return false;
  const auto& v = node_config[rule.match_key];
  if (v.is_string()) return v.get<std::string>() == rule.match_value;
  return v.dump() == rule.match_value;
}

std::vector<MatchRule> parse_match_rules(const njson& rules_json) {
  std::vector<MatchRule> rules;
  for (const auto& r : rules_json) {
    MatchRule rule;
    rule.match_key = r.at("match-key").get<std::string>();
    rule.match_value = r.at("match-value").get<std::string>();
    rule.payload = r.contains("config-common") ? r["config-common"] : njson::object();
    rules.push_back(std::move(rule));
  }
  return rules;
}

namespace {

void deep_merge(njson& base, const njson& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [k, v] : overlay.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object()) {
      deep_merge(base[k], v);
    } else {
      base[k] = v;
    }
  }
}

}  // namespace

njson merge_common_config(const std::string& name, const njson& node_specific,
                          const std::vector<MatchRule>& common_rules) {
  if (!node_specific.contains("type")) {
    throw ConfigError("node " + name + ": missing mandatory field 'type'");
  }
  njson merged = njson::object();
  for (const auto& rule : common_rules) {
    if (rule_matches(rule, node_specific)) {
      deep_merge(merged, rule.payload);
    }
  }
  deep_merge(merged, node_specific);  // node-specific fields win
  merged["name"] = name;
  for (const char* field : {"image", "cpu-request", "mem-request"}) {
    if (!merged.contains(field)) {
      throw ConfigError("node " + name + ": unresolved mandatory field '" +
                        std::string(field) + "' after merge");
    }
  }
  return merged;
}

std::optional<std::string> AddressPlan::loopback6(const std::string& node) const {
  auto fam = families.find("v6");
  if (fam == families.end()) return std::nullopt;
  auto it = fam->second.find(node);
  if (it == fam->second.end()) return std::nullopt;
  return it->second.loopback;
}

AddressPlan assign_addresses(
    const std::vector<std::pair<std::string, njson>>& merged_nodes) {
  AddressPlan plan;
  struct Family {
    const char* key;        // families map key
    const char* cidr_field; // rule field with the super-CIDR
    const char* slice_field;
    int default_slice;
  };
  const Family fams[] = {{"v6", "super-cidr6", "slice-prefix6", 126},
                         {"v4", "super-cidr4", "slice-prefix4", 30}};

  // slice counters keyed by super-CIDR text, so several nodes matching the
  // same rule receive consecutive subnets
  std::map<std::string, uint64_t> counters;

  for (const auto& fam : fams) {
    std::vector<std::pair<unsigned __int128, unsigned __int128>> taken;
    for (const auto& [name, cfg] : merged_nodes) {
      if (!cfg.contains("L3-config")) continue;
      const njson& l3 = cfg["L3-config"];
      if (!l3.value("auto-assign-ips", false)) continue;
      if (!l3.contains("auto-assign-super-cidr")) continue;

      std::vector<const njson*> matches;
      for (const auto& rule : l3["auto-assign-super-cidr"]) {
        if (!rule.contains(fam.cidr_field)) continue;
        MatchRule m;
        m.match_key = rule.at("match-key").get<std::string>();
        m.match_value = rule.at("match-value").get<std::string>();
        if (rule_matches(m, cfg)) matches.push_back(&rule);
      }
      if (matches.empty()) continue;
      if (matches.size() > 1) {
        throw ConfigError("node " + name + ": " + std::to_string(matches.size()) +
                          " super-CIDR rules match for family " + fam.key +
                          "; exactly one is required");
      }
      const njson& rule = *matches.front();
      cidr::Cidr super = cidr::parse(rule.at(fam.cidr_field).get<std::string>());
      int slice_prefix = rule.value(fam.slice_field, fam.default_slice);
      uint64_t& counter = counters[std::string(fam.key) + "|" + super.to_string()];
      cidr::Cidr subnet;
      try {
        subnet = cidr::slice(super, slice_prefix, counter);
      } catch (const std::out_of_range& e) {
        throw ConfigError("address assignment for node " + name + ": " + e.what());
      }
      ++counter;
      for (const auto& [lo, hi] : taken) {
        if (subnet.base <= hi && subnet.last_address() >= lo) {
          throw ConfigError("address assignment for node " + name +
                            ": subnet " + subnet.to_string() +
                            " overlaps a previously assigned one");
        }
      }
      taken.emplace_back(subnet.base, subnet.last_address());
      AddressAssignment a;
      a.subnet = subnet;
      a.loopback = subnet.address_string(subnet.last_address());
      plan.families[fam.key][name] = std::move(a);
    }
  }
  return plan;
}

// --- scenario generation -----------------------------------------------------

GeneratorConfig parse_generator_config(const njson& j) {
  GeneratorConfig cfg;
  cfg.raw = j;
  cfg.start_unix =
      util::parse_iso8601(j.value("start_time", std::string("2023-10-01T00:00:00Z")));
  cfg.duration_s = j.value("duration_s", 0.0);

  const njson& w = j.at("constellation");
  cfg.walker.altitude_km = w.at("altitude_km").get<double>();
  cfg.walker.inclination_deg = w.at("inclination_deg").get<double>();
  cfg.walker.num_planes = w.at("num_planes").get<int>();
  cfg.walker.sats_per_plane = w.at("sats_per_plane").get<int>();
  cfg.walker.phasing_factor = w.value("phasing_factor", 1);
  std::string pattern = w.value("pattern", std::string("star"));
  if (pattern == "star") {
    cfg.walker.pattern = orbit::Pattern::Star;
  } else if (pattern == "delta") {
    cfg.walker.pattern = orbit::Pattern::Delta;
  } else {
    throw ConfigError("constellation pattern must be 'star' or 'delta'");
  }
  cfg.walker.raan_spread_deg = w.value(
      "raan_spread_deg", cfg.walker.pattern == orbit::Pattern::Star ? 180.0 : 360.0);
  cfg.walker.validate();

  for (const auto& g : j.value("ground_nodes", njson::array())) {
    orbit::GroundNode node;
    node.name = g.at("name").get<std::string>();
    std::string kind = g.at("kind").get<std::string>();
    if (kind == "gateway") {
      node.kind = orbit::GroundKind::Gateway;
    } else if (kind == "user") {
      node.kind = orbit::GroundKind::User;
    } else {
      throw ConfigError("ground node " + node.name + ": kind must be gateway or user");
    }
    node.latitude_deg = g.at("latitude_deg").get<double>();
    node.longitude_deg = g.at("longitude_deg").get<double>();
    if (std::abs(node.latitude_deg) > 90 || std::abs(node.longitude_deg) > 180) {
      throw ConfigError("ground node " + node.name + ": bad coordinates");
    }
    node.max_antennas = g.value("max_antennas",
                                node.kind == orbit::GroundKind::Gateway ? 4 : 1);
    cfg.ground_nodes.push_back(std::move(node));
  }

  if (j.contains("visibility")) {
    cfg.min_elevation_deg = j["visibility"].value("min_elevation_deg", 25.0);
  }

  if (j.contains("phy")) {
    const njson& p = j["phy"];
    cfg.phy.isl_rate_mbps = p.value("isl_rate_mbps", 400.0);
    cfg.phy.isl_loss_fraction = p.value("isl_loss_fraction", 0.0);
    cfg.phy.ground_rate_model = p.value("ground_rate_model", std::string("slant-range"));
    if (cfg.phy.ground_rate_model != "slant-range" &&
        cfg.phy.ground_rate_model != "fixed") {
      throw ConfigError("unknown ground rate model '" + cfg.phy.ground_rate_model +
                        "' (expected slant-range or fixed)");
    }
    cfg.phy.ground_fixed_rate_mbps = p.value("ground_fixed_rate_mbps", 100.0);
    cfg.phy.access_loss_fraction = p.value("access_loss_fraction", 0.0);
    auto read_slant = [&](const char* key, linkmodel::SlantRateParams& out) {
      if (!p.contains(key)) throw ConfigError(std::string("phy block missing '") + key + "'");
      const njson& s = p[key];
      out.zenith_rate_mbps = s.at("zenith_rate_mbps").get<double>();
      out.zenith_snr_db = s.at("zenith_snr_db").get<double>();
      out.zenith_atmos_loss_db = s.value("zenith_atmos_loss_db", 0.5);
      out.altitude_km = cfg.walker.altitude_km;
    };
    if (cfg.phy.ground_rate_model == "slant-range") {
      read_slant("gateway", cfg.phy.gateway_params);
      read_slant("user", cfg.phy.user_params);
    }
  } else if (!cfg.ground_nodes.empty()) {
    throw ConfigError("ground nodes configured but no phy block given");
  }

  if (j.contains("quantization")) {
    const njson& q = j["quantization"];
    cfg.quant.delay_quantum_ms = q.value("delay_quantum_ms", 1.0);
    cfg.quant.rate_quantum_mbps = q.value("rate_quantum_mbps", 1.0);
    cfg.quant.epoch_interval_s = q.value("epoch_interval_s", 5.0);
    if (cfg.quant.delay_quantum_ms <= 0 || cfg.quant.rate_quantum_mbps <= 0 ||
        cfg.quant.epoch_interval_s <= 0) {
      throw ConfigError("quantization quanta must be > 0");
    }
  }

  if (j.contains("node_config_common")) cfg.node_config_common = j["node_config_common"];
  if (j.contains("oracle")) cfg.oracle = j["oracle"];
  return cfg;
}

LinkSet compute_snapshot(const GeneratorConfig& cfg,
                         const orbit::ConstellationState& constellation,
                         double t) {
  LinkSet links;
  const auto positions = orbit::propagate(constellation, t);
  const int per_plane = cfg.walker.sats_per_plane;

  const auto isls = linkmodel::grid_plus_isls(cfg.walker);
  for (const auto& [sa, sb] : isls) {
    int fa = sa.flat(per_plane), fb = sb.flat(per_plane);
    LinkRecord rec;
    rec.endpoint1 = constellation.sat_name(std::min(fa, fb));
    rec.endpoint2 = constellation.sat_name(std::max(fa, fb));
    double dist = orbit::slant_range_km(positions[fa], positions[fb]);
    rec.attrs.rate_mbps = cfg.phy.isl_rate_mbps;
    rec.attrs.delay_ms = linkmodel::propagation_delay_ms(dist);
    rec.attrs.loss_fraction = cfg.phy.isl_loss_fraction;
    links[LinkKey(rec.endpoint1, rec.endpoint2)] = std::move(rec);
  }

  const auto visible =
      linkmodel::visible_links(cfg.ground_nodes, constellation, t, cfg.min_elevation_deg);
  for (const auto& [gnode, sid] : visible) {
    int flat = sid.flat(per_plane);
    LinkRecord rec;
    rec.endpoint1 = constellation.sat_name(flat);
    rec.endpoint2 = gnode->name;
    double dist = orbit::slant_range_km(positions[flat], orbit::ground_ecef(*gnode));
    if (cfg.phy.ground_rate_model == "fixed") {
      rec.attrs.rate_mbps = cfg.phy.ground_fixed_rate_mbps;
    } else {
      const auto& params = gnode->kind == orbit::GroundKind::Gateway
                               ? cfg.phy.gateway_params
                               : cfg.phy.user_params;
      rec.attrs.rate_mbps = linkmodel::slant_range_bitrate_mbps(dist, params);
    }
    rec.attrs.delay_ms = linkmodel::propagation_delay_ms(dist);
    rec.attrs.loss_fraction = cfg.phy.access_loss_fraction;
    links[LinkKey(rec.endpoint1, rec.endpoint2)] = std::move(rec);
  }
  return links;
}

namespace {

njson default_common_blocks() {
  auto block = [](const std::string& type, const std::string& image,
                  const std::string& super6) {
    njson rule;
    rule["match-key"] = "type";
    rule["match-value"] = type;
    njson common;
    common["image"] = image;
    common["cpu-request"] = "100m";
    common["mem-request"] = "100MiB";
    njson l3;
    l3["enable-routing"] = true;
    l3["routing-module"] = "extra.routing.local6";
    l3["auto-assign-ips"] = true;
    l3["auto-assign-super-cidr"] = njson::array(
        {njson{{"match-key", "type"}, {"match-value", type}, {"super-cidr6", super6}}});
    common["L3-config"] = l3;
    rule["config-common"] = common;
    return rule;
  };
  return njson::array({
      block("satellite", "nsb/sat-node:latest", "2001:db8:100::/48"),
      block("gateway", "nsb/ground-node:latest", "2001:db8:200::/48"),
      block("user", "nsb/ground-node:latest", "2001:db8:300::/48"),
  });
}

}  // namespace

GeneratedScenario generate_scenario(const GeneratorConfig& cfg) {
  GeneratedScenario out;
  out.constellation = orbit::generate_walker(cfg.walker);

  const double interval = cfg.quant.epoch_interval_s;
  const int epochs = static_cast<int>(std::floor(cfg.duration_s / interval)) + 1;
  LinkSet prev;  // epoch 0 diffs against the empty set -> full adds
  for (int k = 0; k < epochs; ++k) {
    double t = k * interval;
    LinkSet snap = compute_snapshot(cfg, out.constellation, t);
    out.epochs.push_back(diff_snapshots(prev, snap, cfg.quant,
                                        cfg.start_unix + static_cast<int64_t>(t)));
    prev = std::move(snap);
  }

  njson sat_config;
  sat_config["node-config-common"] = cfg.node_config_common.is_null()
                                         ? default_common_blocks()
                                         : cfg.node_config_common;
  njson nodes = njson::object();
  for (int i = 0; i < cfg.walker.total_satellites(); ++i) {
    nodes[out.constellation.sat_name(i)] = njson{{"type", "satellite"}};
  }
  for (const auto& g : cfg.ground_nodes) {
    njson n;
    n["type"] = g.kind == orbit::GroundKind::Gateway ? "gateway" : "user";
    n["latitude-deg"] = g.latitude_deg;
    n["longitude-deg"] = g.longitude_deg;
    n["max-antennas"] = g.max_antennas;
    nodes[g.name] = n;
  }
  sat_config["nodes"] = nodes;
  sat_config["epoch-config"] =
      njson{{"epoch-dir", "."}, {"file-pattern", "NetSatBench-epoch*.json"}};
  sat_config["generator"] = cfg.raw;
  out.sat_config = sat_config;
  return out;
}

void write_scenario(const GeneratedScenario& scenario,
                    const QuantizationPolicy& q, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "sat-config.json");
    f << scenario.sat_config.dump(1) << "\n";
  }
  const std::string pattern =
      scenario.sat_config["epoch-config"]["file-pattern"].get<std::string>();
  for (size_t k = 0; k < scenario.epochs.size(); ++k) {
    std::ofstream f(fs::path(out_dir) / epoch_file_name(pattern, static_cast<int>(k)));
    f << epoch_to_json(scenario.epochs[k], q).dump(1) << "\n";
  }
}

njson load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  try {
    return njson::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string epoch_file_name(const std::string& pattern, int index) {
  auto star = pattern.find('*');
  if (star == std::string::npos) throw ConfigError("epoch file pattern needs a '*'");
  return pattern.substr(0, star) + std::to_string(index) + pattern.substr(star + 1);
}

std::vector<std::string> list_epoch_files(const std::string& dir,
                                          const std::string& pattern) {
  auto star = pattern.find('*');
  if (star == std::string::npos) throw ConfigError("epoch file pattern needs a '*'");
  const std::string prefix = pattern.substr(0, star);
  const std::string suffix = pattern.substr(star + 1);
  std::vector<std::pair<long, std::string>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= prefix.size() + suffix.size()) continue;
    if (name.rfind(prefix, 0) != 0) continue;
    if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    const std::string middle =
        name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (middle.empty() ||
        !std::all_of(middle.begin(), middle.end(), [](char c) { return std::isdigit(c); })) {
      continue;
    }
    found.emplace_back(std::stol(middle), entry.path().string());
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  out.reserve(found.size());
  for (auto& [idx, path] : found) out.push_back(std::move(path));
  return out;
}

EpochFile load_epoch_file(const std::string& path) {
  return epoch_from_json(load_json_file(path));
}

}  // namespace scenario
}  // namespace nsb
