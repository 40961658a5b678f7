#include "nsb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nsb/util.hpp"

namespace nsb {
namespace harness {

namespace fs = std::filesystem;

namespace {

// remaining-visibility scans are capped here; far beyond any lifetime
// threshold while keeping control ticks cheap
constexpr double kVisibilityHorizonS = 900.0;

}  // namespace

std::vector<std::string> ScenarioRuntime::epoch_paths() const {
  return scenario::list_epoch_files(epoch_dir, file_pattern);
}

ScenarioRuntime load_scenario(const std::string& dir) {
  ScenarioRuntime rt;
  rt.dir = dir;
  rt.sat_config = scenario::load_json_file((fs::path(dir) / "sat-config.json").string());
  if (!rt.sat_config.contains("generator")) {
    throw ConfigError("sat-config.json lacks the generator block");
  }
  rt.gen = scenario::parse_generator_config(rt.sat_config["generator"]);
  rt.constellation = orbit::generate_walker(rt.gen.walker);

  const njson& epoch_cfg = rt.sat_config.at("epoch-config");
  std::string epoch_dir = epoch_cfg.value("epoch-dir", std::string("."));
  rt.epoch_dir = fs::path(epoch_dir).is_absolute()
                     ? epoch_dir
                     : (fs::path(dir) / epoch_dir).lexically_normal().string();
  rt.file_pattern =
      epoch_cfg.value("file-pattern", std::string("NetSatBench-epoch*.json"));

  auto rules = scenario::parse_match_rules(
      rt.sat_config.value("node-config-common", njson::array()));
  for (const auto& [name, specific] : rt.sat_config.at("nodes").items()) {
    rt.merged_nodes.emplace_back(name,
                                 scenario::merge_common_config(name, specific, rules));
  }
  rt.addresses = scenario::assign_addresses(rt.merged_nodes);

  for (const auto& [name, cfg] : rt.merged_nodes) {
    std::string type = cfg.at("type").get<std::string>();
    routing::NodeKind kind;
    if (type == "satellite") {
      kind = routing::NodeKind::Satellite;
    } else if (type == "gateway") {
      kind = routing::NodeKind::Gateway;
    } else if (type == "user") {
      kind = routing::NodeKind::User;
    } else {
      throw ConfigError("node " + name + ": unknown type '" + type + "'");
    }
    rt.kinds[name] = kind;
    if (auto lb = rt.addresses.loopback6(name)) {
      rt.names.add(name, *lb);
    }
    if (kind != routing::NodeKind::Satellite) {
      orbit::GroundNode g;
      g.name = name;
      g.kind = kind == routing::NodeKind::Gateway ? orbit::GroundKind::Gateway
                                                  : orbit::GroundKind::User;
      g.latitude_deg = cfg.at("latitude-deg").get<double>();
      g.longitude_deg = cfg.at("longitude-deg").get<double>();
      g.max_antennas = cfg.value("max-antennas", 1);
      rt.ground_by_name[name] = g;
    }
  }
  for (int i = 0; i < rt.gen.walker.total_satellites(); ++i) {
    rt.sat_flat_by_name[rt.constellation.sat_name(i)] = i;
  }
  return rt;
}

void populate_store(const ScenarioRuntime& rt, statestore::KeyValueStore& store,
                    const std::map<std::string, std::string>* worker_of_node,
                    const njson* workers_json) {
  if (workers_json) {
    const njson& map = workers_json->contains("workers") ? (*workers_json)["workers"]
                                                         : *workers_json;
    for (const auto& [name, spec] : map.items()) {
      store.put("/config/workers/" + name, spec);
    }
  }
  for (const auto& [name, merged] : rt.merged_nodes) {
    njson cfg = merged;
    auto v6 = rt.addresses.families.find("v6");
    if (v6 != rt.addresses.families.end()) {
      auto it = v6->second.find(name);
      if (it != v6->second.end()) {
        cfg["L3-config"]["cidr-v6"] = it->second.subnet.to_string();
      }
    }
    if (worker_of_node) {
      auto it = worker_of_node->find(name);
      if (it != worker_of_node->end()) cfg["worker"] = it->second;
    }
    store.put("/config/nodes/" + name, cfg);
    if (auto lb = rt.addresses.loopback6(name)) {
      store.put("/config/etchosts6/" + name, *lb);
    }
  }
}

GenerateStats generate_scenario_dir(const njson& generator_config,
                                    const std::string& out_dir) {
  auto cfg = scenario::parse_generator_config(generator_config);
  auto scen = scenario::generate_scenario(cfg);

  GenerateStats stats;
  stats.satellites = cfg.walker.total_satellites();

  bool oracle_enabled = cfg.oracle.is_null() ? true : cfg.oracle.value("enabled", true);
  if (oracle_enabled) {
    // addresses are deterministic from the sat-config, so route tasks can be
    // rendered now with the loopbacks init will assign later
    auto rules = scenario::parse_match_rules(scen.sat_config["node-config-common"]);
    std::vector<std::pair<std::string, njson>> merged;
    for (const auto& [name, specific] : scen.sat_config["nodes"].items()) {
      merged.emplace_back(name, scenario::merge_common_config(name, specific, rules));
    }
    auto addresses = scenario::assign_addresses(merged);
    routing::NameResolver names;
    std::map<std::string, routing::NodeKind> kinds;
    for (const auto& [name, cfgj] : merged) {
      std::string type = cfgj.at("type").get<std::string>();
      kinds[name] = type == "satellite" ? routing::NodeKind::Satellite
                    : type == "gateway" ? routing::NodeKind::Gateway
                                        : routing::NodeKind::User;
      if (auto lb = addresses.loopback6(name)) names.add(name, *lb);
    }
    auto oracle_cfg =
        routing::parse_oracle_config(cfg.oracle, cfg.quant.epoch_interval_s);
    auto result = routing::oracle_compute(std::move(scen.epochs), kinds, names,
                                          oracle_cfg, cfg.quant.epoch_interval_s);
    scen.epochs = std::move(result.files);
    stats.oracle_tasks = result.tasks_emitted;
    stats.reachability_gaps = result.gaps.size();
  }

  scenario::write_scenario(scen, cfg.quant, out_dir);
  stats.epoch_files = static_cast<int>(scen.epochs.size());
  return stats;
}

srv6::HandoverConfig parse_strategy(const std::string& text) {
  srv6::HandoverConfig cfg;
  if (text == "local-min-delay") {
    cfg.strategy = srv6::Strategy::LocalMinAccessDelay;
    return cfg;
  }
  if (text.rfind("e2e:", 0) == 0) {
    cfg.strategy = srv6::Strategy::EndToEnd;
    cfg.filter_sequence.clear();
    for (const auto& part : util::split(text.substr(4), ',')) {
      if (part.empty()) continue;
      int id = std::stoi(part);
      if (id < 1 || id > 5) throw ConfigError("policy filter ids are 1..5");
      cfg.filter_sequence.push_back(id);
    }
    if (cfg.filter_sequence.empty()) {
      throw ConfigError("e2e strategy needs a filter sequence, e.g. e2e:1,2,4");
    }
    return cfg;
  }
  throw ConfigError("unknown strategy '" + text +
                    "' (expected local-min-delay or e2e:<ids>)");
}

// --- experiment ---------------------------------------------------------------

namespace {

struct SessionRuntime {
  std::string user, gateway;
  srv6::Session session;
  bool registered = false;   // a registration has succeeded at some point
  double active_from = 0;    // when the latest registration completed
  std::optional<srv6::HandoverOutcome> pending;
  std::vector<std::pair<double, double>> user_pauses, gw_pauses;
  ProbeTrace trace;
  std::mt19937_64 rng{0};
  int registration_failures = 0;
  int handovers = 0, commands = 0, cancels = 0, reregisters = 0;
  int max_isl_hops = 0;
};

struct EffectiveState {
  bool active = false;
  srv6::SatPair pair;
  srv6::SidList forward, reverse;
};

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class Experiment : public srv6::ControlPlaneEnv, public routing::RouteLookup {
 public:
  explicit Experiment(const ExperimentConfig& cfg)
      : cfg_(cfg), rt_(load_scenario(cfg.scenario_dir)) {}

  ExperimentResult run();

  // ControlPlaneEnv
  std::vector<srv6::AccessCandidate> candidates(const std::string& ground,
                                                double t) override;
  int orbit_hops(const std::string& a, const std::string& b) override;
  std::optional<double> tunnel_delay_ms(const std::string& from,
                                        const srv6::SidList& sids,
                                        double t) override;

  // RouteLookup: oracle routes first (they honor drain-before-break), then
  // local access routes; next hops must be live links
  std::optional<std::string> next_hop(const std::string& node,
                                      const std::string& dst) const override;

 private:
  void setup_sessions();
  void apply_epoch_file(const scenario::EpochFile& file, const std::string& name);
  void control_tick(double t);
  void attempt_register(SessionRuntime& s, double t);
  void commit_pending(SessionRuntime& s, double t);
  EffectiveState effective_state(const SessionRuntime& s, double t) const;
  static double release_after_pauses(
      const std::vector<std::pair<double, double>>& pauses, double t);
  ProbeSample probe(SessionRuntime& s, double t);
  std::optional<std::pair<std::vector<std::string>, double>> resolve_tunnel(
      const std::string& from, const srv6::SidList& sids) const;
  double link_delay(const std::string& a, const std::string& b) const;
  void log_event(double t, const std::string& session, const std::string& event,
                 const srv6::SatPair* old_pair, const srv6::SatPair* new_pair,
                 double latency_ms = -1);
  njson build_summary(double duration) const;
  void verify_sample(const SessionRuntime& s, double send_t);

  ExperimentConfig cfg_;
  ScenarioRuntime rt_;
  statestore::KeyValueStore store_;
  std::map<std::string, std::unique_ptr<statestore::NodeAgent>> agents_;
  std::shared_ptr<statestore::Watch> link_watch_;
  std::map<std::string, std::set<std::string>> isl_adj_;
  std::vector<SessionRuntime> sessions_;
  std::vector<njson> handover_log_;
  // per-tick cache of access candidates
  double cache_t_ = -1;
  std::map<std::string, std::vector<srv6::AccessCandidate>> candidate_cache_;
};

std::vector<srv6::AccessCandidate> Experiment::candidates(
    const std::string& ground, double t) {
  if (t != cache_t_) {
    candidate_cache_.clear();
    cache_t_ = t;
  }
  auto cached = candidate_cache_.find(ground);
  if (cached != candidate_cache_.end()) return cached->second;

  std::vector<srv6::AccessCandidate> out;
  auto agent = agents_.find(ground);
  auto gnode = rt_.ground_by_name.find(ground);
  if (agent == agents_.end() || gnode == rt_.ground_by_name.end()) {
    throw ConfigError("unknown ground node " + ground);
  }
  for (const auto& [peer, attrs] : agent->second->link_table()) {
    auto flat = rt_.sat_flat_by_name.find(peer);
    if (flat == rt_.sat_flat_by_name.end()) continue;
    srv6::AccessCandidate c;
    c.sat = peer;
    c.access_delay_ms = attrs.delay_ms;
    c.rate_mbps = attrs.rate_mbps;
    c.visibility_s = orbit::remaining_visibility_s(
        rt_.constellation, flat->second, gnode->second, t,
        rt_.gen.min_elevation_deg, rt_.gen.quant.epoch_interval_s,
        kVisibilityHorizonS);
    out.push_back(std::move(c));
  }
  candidate_cache_[ground] = out;
  return out;
}

int Experiment::orbit_hops(const std::string& a, const std::string& b) {
  return srv6::orbit_hops(a, b, isl_adj_);
}

double Experiment::link_delay(const std::string& a, const std::string& b) const {
  auto agent = agents_.find(a);
  if (agent == agents_.end()) throw ConfigError("unknown node " + a);
  auto it = agent->second->link_table().find(b);
  if (it == agent->second->link_table().end()) {
    throw ConfigError("no link " + a + " -> " + b);
  }
  return it->second.delay_ms;
}

std::optional<std::pair<std::vector<std::string>, double>>
Experiment::resolve_tunnel(const std::string& from,
                           const srv6::SidList& sids) const {
  auto path = srv6::sid_path(sids, from, *this, rt_.names);
  if (!path) return std::nullopt;
  double delay = 0;
  for (size_t i = 0; i + 1 < path->size(); ++i) {
    delay += link_delay((*path)[i], (*path)[i + 1]);
  }
  return std::make_pair(std::move(*path), delay);
}

std::optional<double> Experiment::tunnel_delay_ms(const std::string& from,
                                                  const srv6::SidList& sids,
                                                  double) {
  auto resolved = resolve_tunnel(from, sids);
  if (!resolved) return std::nullopt;
  return resolved->second;
}

std::optional<std::string> Experiment::next_hop(const std::string& node,
                                                const std::string& dst) const {
  auto agent = agents_.find(node);
  if (agent == agents_.end()) return std::nullopt;
  const auto& table = agent->second->route_table();
  const auto& links = agent->second->link_table();
  for (auto origin : {routing::RouteOrigin::Oracle, routing::RouteOrigin::Local}) {
    auto entry = table.lookup(dst, origin);
    if (entry && links.contains(entry->next_hop)) return entry->next_hop;
  }
  return std::nullopt;
}

void Experiment::setup_sessions() {
  std::vector<SessionSpec> specs = cfg_.sessions;
  if (specs.empty()) {
    // every user, closest gateway
    for (const auto& [name, g] : rt_.ground_by_name) {
      if (g.kind != orbit::GroundKind::User) continue;
      std::string best;
      double best_dist = 0;
      for (const auto& [gw_name, gw] : rt_.ground_by_name) {
        if (gw.kind != orbit::GroundKind::Gateway) continue;
        double d = (orbit::ground_ecef(g) - orbit::ground_ecef(gw)).norm();
        if (best.empty() || d < best_dist) {
          best = gw_name;
          best_dist = d;
        }
      }
      if (best.empty()) throw ConfigError("no gateway configured");
      specs.push_back({name, best});
    }
  }
  std::sort(specs.begin(), specs.end(),
            [](const SessionSpec& a, const SessionSpec& b) { return a.user < b.user; });
  for (const auto& spec : specs) {
    if (!rt_.ground_by_name.contains(spec.user)) {
      throw ConfigError("unknown user " + spec.user);
    }
    if (!rt_.ground_by_name.contains(spec.gateway)) {
      throw ConfigError("unknown gateway " + spec.gateway);
    }
    SessionRuntime s;
    s.user = spec.user;
    s.gateway = spec.gateway;
    s.trace.user = spec.user;
    s.trace.gateway = spec.gateway;
    s.rng.seed(cfg_.seed ^ fnv1a(spec.user));
    sessions_.push_back(std::move(s));
  }
}

void Experiment::apply_epoch_file(const scenario::EpochFile& file,
                                  const std::string& name) {
  statestore::apply_epoch(store_, file, rt_.gen.quant, name);
  // keep the ISL adjacency mirror in sync
  while (auto ev = link_watch_->poll()) {
    const std::string prefix = "/config/links/";
    std::string rest = ev->key.substr(prefix.size());
    auto slash = rest.find('/');
    if (slash == std::string::npos) continue;
    std::string node = rest.substr(0, slash);
    std::string peer = rest.substr(slash + 1);
    if (peer.rfind("vl_", 0) != 0) continue;
    peer = peer.substr(3);
    auto nk = rt_.kinds.find(node);
    auto pk = rt_.kinds.find(peer);
    if (nk == rt_.kinds.end() || pk == rt_.kinds.end()) continue;
    if (nk->second != routing::NodeKind::Satellite ||
        pk->second != routing::NodeKind::Satellite) {
      continue;
    }
    if (ev->is_delete()) {
      isl_adj_[node].erase(peer);
    } else {
      isl_adj_[node].insert(peer);
    }
  }
  for (auto& [agent_name, agent] : agents_) {
    agent->drain_events();
  }
}

void Experiment::log_event(double t, const std::string& session,
                           const std::string& event, const srv6::SatPair* old_pair,
                           const srv6::SatPair* new_pair, double latency_ms) {
  njson e;
  e["t"] = t;
  e["session"] = session;
  e["event"] = event;
  e["old_pair"] = old_pair ? njson{{"gss", old_pair->gss}, {"uss", old_pair->uss}}
                           : njson();
  e["new_pair"] = new_pair ? njson{{"gss", new_pair->gss}, {"uss", new_pair->uss}}
                           : njson();
  if (latency_ms >= 0) e["latency_ms"] = latency_ms;
  handover_log_.push_back(std::move(e));
}

void Experiment::attempt_register(SessionRuntime& s, double t) {
  auto outcome = srv6::register_session(s.user, s.gateway, *this, t);
  if (!outcome.ok) {
    ++s.registration_failures;
    return;
  }
  bool was_registered = s.registered;
  s.session = outcome.session;
  s.registered = true;
  s.active_from = outcome.complete_t;
  s.pending.reset();
  log_event(t, s.user, was_registered ? "register" : "register", nullptr,
            &s.session.pair, outcome.latency_ms);
}

void Experiment::commit_pending(SessionRuntime& s, double t) {
  if (!s.pending || t < s.pending->t_end) return;
  srv6::commit_handover(s.session, *s.pending);
  if (s.pending->success) ++s.handovers;
  s.pending.reset();
}

void Experiment::control_tick(double t) {
  for (auto& s : sessions_) {
    commit_pending(s, t);
    if (!s.registered || s.session.state == srv6::SessionState::Lost) {
      attempt_register(s, t);
      continue;
    }
    if (s.session.state != srv6::SessionState::Active) continue;

    auto hb = srv6::heartbeat_check(s.session, *this, t, cfg_.handover);
    if (hb == srv6::HeartbeatResult::TriggerReregister) {
      ++s.reregisters;
      log_event(t, s.user, "reregister", &s.session.pair, nullptr);
      attempt_register(s, t);
      continue;
    }
    if (hb != srv6::HeartbeatResult::Ok) continue;

    auto plan = srv6::evaluate_handover(s.session, *this, t, cfg_.handover);
    if (!plan) continue;
    auto outcome = srv6::execute_handover(s.session, *plan, *this, t, cfg_.handover);
    s.session.state = srv6::SessionState::HandoverPending;
    ++s.commands;
    log_event(t, s.user, "ho-command", &outcome.old_pair, &outcome.new_pair);
    if (outcome.success) {
      log_event(outcome.t_complete_arrive, s.user, "ho-complete", &outcome.old_pair,
                &outcome.new_pair);
    } else {
      ++s.cancels;
      log_event(outcome.t_end, s.user, "ho-cancel", &outcome.old_pair,
                &outcome.new_pair);
    }
    if (outcome.gw_pause_start >= 0) {
      s.gw_pauses.emplace_back(outcome.gw_pause_start, outcome.gw_pause_end);
    }
    if (outcome.user_pause_start >= 0) {
      s.user_pauses.emplace_back(outcome.user_pause_start, outcome.user_pause_end);
    }
    s.pending = std::move(outcome);
  }
}

EffectiveState Experiment::effective_state(const SessionRuntime& s,
                                           double t) const {
  EffectiveState st;
  if (!s.registered || t < s.active_from) return st;
  if (s.session.state == srv6::SessionState::Lost) return st;
  st.active = true;
  st.pair = s.session.pair;
  st.forward = s.session.forward_sids;
  st.reverse = s.session.reverse_sids;
  if (s.pending) {
    const auto& p = *s.pending;
    if (p.success && t >= p.t_end) {
      st.pair = p.new_pair;
      st.forward = p.new_forward;
      st.reverse = p.new_reverse;
    } else if (p.user_switch_t >= 0 && t >= p.user_switch_t && t < p.t_end) {
      // the user has switched its reverse route; the gateway still forwards
      // over the old tunnel until the handover completes
      st.reverse = p.new_reverse;
      st.pair.uss = p.new_pair.uss;
    }
  }
  return st;
}

double Experiment::release_after_pauses(
    const std::vector<std::pair<double, double>>& pauses, double t) {
  // pauses are appended in time order and do not overlap (one handover in
  // flight per session); probes issued inside one are released at its end
  for (auto it = pauses.rbegin(); it != pauses.rend(); ++it) {
    if (t >= it->first && t < it->second) return it->second;
    if (t >= it->second) break;
  }
  return t;
}

ProbeSample Experiment::probe(SessionRuntime& s, double t) {
  ProbeSample sample;
  sample.send_t = t;
  auto eff = effective_state(s, t);
  sample.uss = eff.pair.uss;
  sample.gss = eff.pair.gss;
  if (!eff.active) {
    sample.lost = true;
    return sample;
  }

  // uplink, held by a user-side pause
  double release = release_after_pauses(s.user_pauses, t);
  if (release != t) {
    eff = effective_state(s, release);
    if (!eff.active) {
      sample.lost = true;
      return sample;
    }
    sample.uss = eff.pair.uss;
    sample.gss = eff.pair.gss;
  }
  auto up = resolve_tunnel(s.user, eff.reverse);
  if (!up) {
    sample.lost = true;
    return sample;
  }
  sample.hops = static_cast<int>(up->first.size()) - 1;
  int isl_hops = 0;
  for (size_t i = 0; i + 1 < up->first.size(); ++i) {
    if (rt_.sat_flat_by_name.contains(up->first[i]) &&
        rt_.sat_flat_by_name.contains(up->first[i + 1])) {
      ++isl_hops;
    }
  }
  s.max_isl_hops = std::max(s.max_isl_hops, isl_hops);
  double arrive_gw = release + up->second / 1000.0;

  // downlink, held by a gateway-side pause
  double reply_t = release_after_pauses(s.gw_pauses, arrive_gw);
  auto eff_down = effective_state(s, reply_t);
  if (!eff_down.active) {
    sample.lost = true;
    return sample;
  }
  auto down = resolve_tunnel(s.gateway, eff_down.forward);
  if (!down) {
    sample.lost = true;
    return sample;
  }
  sample.rtt_ms = (reply_t + down->second / 1000.0 - t) * 1000.0;

  if (cfg_.loss_enabled) {
    for (const auto* path : {&up->first, &down->first}) {
      for (size_t i = 0; i + 1 < path->size() && !sample.lost; ++i) {
        auto agent = agents_.find((*path)[i]);
        auto link = agent->second->link_table().find((*path)[i + 1]);
        if (link == agent->second->link_table().end()) continue;
        double loss = link->second.loss_fraction;
        if (loss > 0 && uniform01(s.rng) < loss) sample.lost = true;
      }
      if (sample.lost) break;
    }
    if (sample.lost) {
      sample.rtt_ms = -1;
      return sample;
    }
  }

  if (cfg_.verify_traces) verify_sample(s, t);
  return sample;
}

// Recomputes the probe's path delays straight from the store instead of the
// agent tables; a mismatch means the agent mirror diverged.
void Experiment::verify_sample(const SessionRuntime& s, double send_t) {
  auto eff = effective_state(s, send_t);
  if (!eff.active) return;
  auto up = resolve_tunnel(s.user, eff.reverse);
  if (!up) return;
  double from_store = 0;
  for (size_t i = 0; i + 1 < up->first.size(); ++i) {
    auto value = store_.get("/config/links/" + up->first[i] + "/vl_" + up->first[i + 1]);
    if (!value) throw ConfigError("trace verification: link missing from store");
    from_store += scenario::parse_link_attrs(*value).delay_ms;
  }
  if (std::abs(from_store - up->second) > 1e-9) {
    throw ConfigError("trace verification: agent link table diverged from store");
  }
}

njson Experiment::build_summary(double duration) const {
  njson users = njson::object();
  int total_handovers = 0;
  for (const auto& s : sessions_) {
    std::vector<double> rtts;
    int lost = 0;
    for (const auto& sample : s.trace.samples) {
      if (sample.lost) {
        ++lost;
      } else {
        rtts.push_back(sample.rtt_ms);
      }
    }
    std::sort(rtts.begin(), rtts.end());
    auto quantile = [&](double q) -> double {
      if (rtts.empty()) return -1;
      size_t idx = static_cast<size_t>(q * (rtts.size() - 1));
      return rtts[idx];
    };
    njson u;
    u["gateway"] = s.gateway;
    u["samples"] = s.trace.samples.size();
    u["lost"] = lost;
    u["handovers"] = s.handovers;
    u["ho_commands"] = s.commands;
    u["ho_cancels"] = s.cancels;
    u["reregisters"] = s.reregisters;
    u["registration_failures"] = s.registration_failures;
    u["max_isl_hops"] = s.max_isl_hops;
    if (!rtts.empty()) {
      u["rtt_ms"] = njson{{"min", rtts.front()},  {"p50", quantile(0.50)},
                          {"p90", quantile(0.90)}, {"p99", quantile(0.99)},
                          {"max", rtts.back()}};
    }
    users[s.user] = std::move(u);
    total_handovers += s.handovers;
  }
  njson summary;
  summary["duration_s"] = duration;
  summary["seed"] = cfg_.seed;
  summary["strategy"] = cfg_.handover.strategy == srv6::Strategy::LocalMinAccessDelay
                            ? "local-min-delay"
                            : "e2e";
  summary["total_handovers"] = total_handovers;
  summary["users"] = std::move(users);
  return summary;
}

ExperimentResult Experiment::run() {
  populate_store(rt_, store_);
  link_watch_ = store_.watch_prefixes({"/config/links/"});
  for (const auto& [name, cfg] : rt_.merged_nodes) {
    std::string module;
    if (cfg.contains("L3-config")) {
      module = cfg["L3-config"].value("routing-module", std::string());
    }
    auto plugin = routing::make_plugin(module);
    agents_[name] =
        std::make_unique<statestore::NodeAgent>(name, store_, plugin, &rt_.names);
  }
  setup_sessions();

  auto paths = rt_.epoch_paths();
  if (paths.empty()) throw ConfigError("no epoch files in " + rt_.epoch_dir);

  std::vector<scenario::EpochFile> files;
  files.reserve(paths.size());
  for (const auto& p : paths) files.push_back(scenario::load_epoch_file(p));
  const int64_t start_unix = files.front().time_unix;
  const double scenario_duration =
      static_cast<double>(files.back().time_unix - start_unix);
  double duration = cfg_.duration_s > 0 ? std::min(cfg_.duration_s, scenario_duration)
                                        : scenario_duration;
  if (cfg_.duration_s > scenario_duration) {
    throw ConfigError("requested duration exceeds the scenario (" +
                      std::to_string(scenario_duration) + " s)");
  }

  const double probe_period = cfg_.probe_period_ms / 1000.0;
  const double control_interval = cfg_.handover.control_interval_s;
  long next_probe_index = 0;
  long next_control_index = 0;

  for (size_t k = 0; k < files.size(); ++k) {
    double t_k = static_cast<double>(files[k].time_unix - start_unix);
    if (t_k > duration) break;
    std::string name = paths[k].substr(paths[k].find_last_of('/') + 1);
    apply_epoch_file(files[k], name);
    double t_next = k + 1 < files.size()
                        ? static_cast<double>(files[k + 1].time_unix - start_unix)
                        : duration + probe_period;
    t_next = std::min(t_next, duration + probe_period / 2);

    // window [t_k, t_next): control ticks split it into probe sub-intervals
    double window_start = t_k;
    while (window_start < t_next) {
      double tick_t = next_control_index * control_interval;
      bool tick_now = tick_t >= window_start - 1e-9 && tick_t < t_next;
      if (tick_now && tick_t <= window_start + 1e-9) {
        control_tick(tick_t);
        ++next_control_index;
        continue;
      }
      double window_end = tick_now ? tick_t : t_next;
      while (true) {
        double probe_t = next_probe_index * probe_period;
        if (probe_t >= window_end - 1e-9 || probe_t > duration) break;
        for (auto& s : sessions_) {
          s.trace.samples.push_back(probe(s, probe_t));
        }
        ++next_probe_index;
      }
      window_start = window_end;
    }
  }
  // final control tick and trailing commits at the end of the run
  for (auto& s : sessions_) commit_pending(s, duration + 1.0);

  ExperimentResult result;
  for (auto& s : sessions_) result.traces.push_back(std::move(s.trace));
  std::stable_sort(handover_log_.begin(), handover_log_.end(),
                   [](const njson& a, const njson& b) {
                     double ta = a["t"].get<double>(), tb = b["t"].get<double>();
                     if (ta != tb) return ta < tb;
                     return a["session"].get<std::string>() <
                            b["session"].get<std::string>();
                   });
  result.handover_log = std::move(handover_log_);
  result.summary = build_summary(duration);
  result.final_store = store_.dump();
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  Experiment experiment(cfg);
  return experiment.run();
}

std::string traces_csv(const std::vector<ProbeTrace>& traces) {
  struct Row {
    double t;
    const ProbeTrace* trace;
    const ProbeSample* sample;
  };
  std::vector<Row> rows;
  for (const auto& trace : traces) {
    for (const auto& sample : trace.samples) {
      rows.push_back({sample.send_t, &trace, &sample});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.trace->user < b.trace->user;
  });
  std::string out = "t_s,user,gateway,rtt_ms,lost,hops,uss,gss\n";
  for (const auto& row : rows) {
    const auto& s = *row.sample;
    out += util::format_fixed3(s.send_t);
    out += ',';
    out += row.trace->user;
    out += ',';
    out += row.trace->gateway;
    out += ',';
    if (!s.lost) out += util::format_fixed3(s.rtt_ms);
    out += ',';
    out += s.lost ? '1' : '0';
    out += ',';
    out += std::to_string(s.hops);
    out += ',';
    out += s.uss;
    out += ',';
    out += s.gss;
    out += '\n';
  }
  return out;
}

void write_outputs(const ExperimentResult& result, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "traces.csv");
    f << traces_csv(result.traces);
  }
  {
    std::ofstream f(fs::path(out_dir) / "handover-log.jsonl");
    for (const auto& e : result.handover_log) f << e.dump() << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary.json");
    f << result.summary.dump(1) << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "final-store.json");
    f << result.final_store.dump(1) << "\n";
  }
}

}  // namespace harness
}  // namespace nsb
