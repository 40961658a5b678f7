#include "nsb/srv6.hpp"

#include <algorithm>
#include <cassert>
#include <deque>

namespace nsb {
namespace srv6 {

SidList forward_sid_list(const SatPair& pair, const std::string& user) {
  if (pair.gss == pair.uss) return {pair.uss, user};
  return {pair.gss, pair.uss, user};
}

SidList reverse_sid_list(const SatPair& pair, const std::string& gateway) {
  if (pair.gss == pair.uss) return {pair.uss, gateway};
  return {pair.uss, pair.gss, gateway};
}

int orbit_hops(const std::string& a, const std::string& b,
               const std::map<std::string, std::set<std::string>>& isl_adj) {
  if (a == b) return 0;
  if (!isl_adj.contains(a) || !isl_adj.contains(b)) return kUnreachableHops;
  std::map<std::string, int> dist{{a, 0}};
  std::deque<std::string> queue{a};
  while (!queue.empty()) {
    std::string node = queue.front();
    queue.pop_front();
    int d = dist[node];
    auto it = isl_adj.find(node);
    if (it == isl_adj.end()) continue;
    for (const auto& peer : it->second) {
      if (dist.contains(peer)) continue;
      if (peer == b) return d + 1;
      dist[peer] = d + 1;
      queue.push_back(peer);
    }
  }
  return kUnreachableHops;
}

std::optional<std::vector<std::string>> sid_path(
    const SidList& sids, const std::string& from,
    const routing::RouteLookup& lookup, const routing::NameResolver& names) {
  std::vector<std::string> path{from};
  std::string current = from;
  for (const auto& sid : sids) {
    auto segment = routing::resolve_path(lookup, names, current, sid);
    if (!segment.ok()) return std::nullopt;
    path.insert(path.end(), segment.nodes.begin() + 1, segment.nodes.end());
    current = sid;
  }
  return path;
}

std::vector<CandidatePair> build_candidates(ControlPlaneEnv& env,
                                            const std::string& user,
                                            const std::string& gateway,
                                            double t) {
  std::vector<CandidatePair> pairs;
  const auto gw_side = env.candidates(gateway, t);
  const auto user_side = env.candidates(user, t);
  for (const auto& g : gw_side) {
    for (const auto& u : user_side) {
      CandidatePair p;
      p.gss = g.sat;
      p.uss = u.sat;
      p.gss_visibility_s = g.visibility_s;
      p.uss_visibility_s = u.visibility_s;
      p.gss_access_delay_ms = g.access_delay_ms;
      p.uss_access_delay_ms = u.access_delay_ms;
      p.gss_rate_mbps = g.rate_mbps;
      p.uss_rate_mbps = u.rate_mbps;
      p.orbit_hops = env.orbit_hops(g.sat, u.sat);
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

std::vector<CandidatePair> apply_filter(std::vector<CandidatePair> pairs,
                                        int filter_id,
                                        const HandoverConfig& cfg) {
  if (pairs.empty()) return pairs;
  switch (filter_id) {
    case kFilterMinLifetime: {
      std::erase_if(pairs, [&](const CandidatePair& p) {
        return std::min(p.gss_visibility_s, p.uss_visibility_s) < cfg.t_lt_s;
      });
      return pairs;
    }
    case kFilterMinOrbitHops: {
      std::erase_if(pairs, [](const CandidatePair& p) {
        return p.orbit_hops == kUnreachableHops;
      });
      if (pairs.empty()) return pairs;
      int best = std::min_element(pairs.begin(), pairs.end(),
                                  [](const CandidatePair& a, const CandidatePair& b) {
                                    return a.orbit_hops < b.orbit_hops;
                                  })
                     ->orbit_hops;
      std::erase_if(pairs,
                    [&](const CandidatePair& p) { return p.orbit_hops != best; });
      return pairs;
    }
    case kFilterMaxMinVisibility: {
      double best = 0;
      for (const auto& p : pairs) {
        best = std::max(best, std::min(p.gss_visibility_s, p.uss_visibility_s));
      }
      std::erase_if(pairs, [&](const CandidatePair& p) {
        return std::min(p.gss_visibility_s, p.uss_visibility_s) != best;
      });
      return pairs;
    }
    case kFilterMinAccessDelay: {
      double best = pairs.front().gss_access_delay_ms + pairs.front().uss_access_delay_ms;
      for (const auto& p : pairs) {
        best = std::min(best, p.gss_access_delay_ms + p.uss_access_delay_ms);
      }
      std::erase_if(pairs, [&](const CandidatePair& p) {
        return p.gss_access_delay_ms + p.uss_access_delay_ms != best;
      });
      return pairs;
    }
    case kFilterMaxMinAccessRate: {
      double best = 0;
      for (const auto& p : pairs) {
        best = std::max(best, std::min(p.gss_rate_mbps, p.uss_rate_mbps));
      }
      std::erase_if(pairs, [&](const CandidatePair& p) {
        return std::min(p.gss_rate_mbps, p.uss_rate_mbps) != best;
      });
      return pairs;
    }
    default:
      throw std::invalid_argument("unknown policy filter id " +
                                  std::to_string(filter_id));
  }
}

std::optional<CandidatePair> filter_candidates(std::vector<CandidatePair> pairs,
                                               const std::vector<int>& sequence,
                                               const HandoverConfig& cfg) {
  for (int id : sequence) {
    pairs = apply_filter(std::move(pairs), id, cfg);
  }
  if (pairs.empty()) return std::nullopt;
  auto best = std::min_element(pairs.begin(), pairs.end(),
                               [](const CandidatePair& a, const CandidatePair& b) {
                                 return std::tie(a.gss, a.uss) < std::tie(b.gss, b.uss);
                               });
  return *best;
}

namespace {

// min access delay, ties to the lexicographically smallest satellite
std::optional<AccessCandidate> pick_min_delay(
    const std::vector<AccessCandidate>& candidates) {
  const AccessCandidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!best || c.access_delay_ms < best->access_delay_ms ||
        (c.access_delay_ms == best->access_delay_ms && c.sat < best->sat)) {
      best = &c;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

const AccessCandidate* find_sat(const std::vector<AccessCandidate>& candidates,
                                const std::string& sat) {
  for (const auto& c : candidates) {
    if (c.sat == sat) return &c;
  }
  return nullptr;
}

}  // namespace

RegistrationOutcome register_session(const std::string& user,
                                     const std::string& gateway,
                                     ControlPlaneEnv& env, double t) {
  RegistrationOutcome out;
  auto uss = pick_min_delay(env.candidates(user, t));
  if (!uss) {
    out.failure_reason = "no satellite visible to " + user;
    return out;
  }
  auto gss = pick_min_delay(env.candidates(gateway, t));
  if (!gss) {
    out.failure_reason = "no satellite visible to " + gateway;
    return out;
  }
  SatPair pair{gss->sat, uss->sat};

  // request travels user -> USS -> gateway before any tunnel exists
  auto request_delay = env.tunnel_delay_ms(user, SidList{uss->sat, gateway}, t);
  if (!request_delay) {
    out.failure_reason = "registration request unreachable via " + uss->sat;
    return out;
  }
  SidList forward = forward_sid_list(pair, user);
  auto accept_delay = env.tunnel_delay_ms(gateway, forward, t);
  if (!accept_delay) {
    out.failure_reason = "registration accept unreachable via " + gss->sat;
    return out;
  }

  out.ok = true;
  out.session.user = user;
  out.session.gateway = gateway;
  out.session.pair = pair;
  out.session.forward_sids = forward;
  out.session.reverse_sids = reverse_sid_list(pair, gateway);
  out.session.state = SessionState::Active;
  out.session.last_handover_t = t;
  out.latency_ms = *request_delay + *accept_delay;
  out.complete_t = t + out.latency_ms / 1000.0;
  assert(out.session.forward_sids.size() <= 3 && out.session.reverse_sids.size() <= 3);
  return out;
}

std::optional<HandoverPlan> evaluate_handover(const Session& session,
                                              ControlPlaneEnv& env, double t,
                                              const HandoverConfig& cfg) {
  if (session.state != SessionState::Active) return std::nullopt;
  const auto user_side = env.candidates(session.user, t);
  const auto gw_side = env.candidates(session.gateway, t);

  if (cfg.strategy == Strategy::LocalMinAccessDelay) {
    // each side switches independently when a strictly lower access delay
    // is available (or its serving satellite disappeared)
    SatPair target = session.pair;
    auto best_u = pick_min_delay(user_side);
    if (best_u) {
      const AccessCandidate* current = find_sat(user_side, session.pair.uss);
      if (!current || best_u->access_delay_ms < current->access_delay_ms) {
        target.uss = best_u->sat;
      }
    }
    auto best_g = pick_min_delay(gw_side);
    if (best_g) {
      const AccessCandidate* current = find_sat(gw_side, session.pair.gss);
      if (!current || best_g->access_delay_ms < current->access_delay_ms) {
        target.gss = best_g->sat;
      }
    }
    if (target == session.pair) return std::nullopt;
    return HandoverPlan{target};
  }

  // end-to-end: trigger on remaining lifetime or elapsed time
  const AccessCandidate* cur_uss = find_sat(user_side, session.pair.uss);
  const AccessCandidate* cur_gss = find_sat(gw_side, session.pair.gss);
  double remaining = std::min(cur_uss ? cur_uss->visibility_s : 0.0,
                              cur_gss ? cur_gss->visibility_s : 0.0);
  bool triggered =
      remaining < cfg.t_lt_s || (t - session.last_handover_t) > cfg.t_el_s;
  if (!triggered) return std::nullopt;

  auto pairs = build_candidates(env, session.user, session.gateway, t);
  auto selected = filter_candidates(std::move(pairs), cfg.filter_sequence, cfg);
  if (!selected) return std::nullopt;  // retain the current pair
  SatPair target{selected->gss, selected->uss};
  if (target == session.pair) return std::nullopt;
  return HandoverPlan{target};
}

HandoverOutcome execute_handover(const Session& session, const HandoverPlan& plan,
                                 ControlPlaneEnv& env, double t,
                                 const HandoverConfig& cfg) {
  HandoverOutcome out;
  out.old_pair = session.pair;
  out.new_pair = plan.target;
  out.old_forward = session.forward_sids;
  out.old_reverse = session.reverse_sids;
  out.new_forward = forward_sid_list(plan.target, session.user);
  out.new_reverse = reverse_sid_list(plan.target, session.gateway);
  out.t_command_sent = t;
  const double timeout_t = t + cfg.t_ho_s;

  // the gateway pauses downlink traffic while the command is in flight
  out.gw_pause_start = t;

  auto command_delay = env.tunnel_delay_ms(session.gateway, session.forward_sids, t);
  if (!command_delay) {
    // command lost on the old tunnel; timeout restores traffic
    out.success = false;
    out.failure_reason = "handover command lost (old tunnel broken)";
    out.t_end = timeout_t;
    out.gw_pause_end = timeout_t;
    return out;
  }
  out.t_command_arrive = t + *command_delay / 1000.0;
  out.user_switch_t = out.t_command_arrive;
  out.user_pause_start = out.t_command_arrive;
  out.user_pause_end = out.t_command_arrive + cfg.t_ho_s;

  auto complete_delay =
      env.tunnel_delay_ms(session.user, out.new_reverse, out.t_command_arrive);
  if (!complete_delay) {
    out.success = false;
    out.failure_reason = "handover complete lost (new tunnel broken)";
    out.t_end = timeout_t;
    out.gw_pause_end = timeout_t;
    return out;
  }
  out.t_complete_arrive = out.t_command_arrive + *complete_delay / 1000.0;
  if (out.t_complete_arrive > timeout_t) {
    out.success = false;
    out.failure_reason = "handover complete after timeout";
    out.t_end = timeout_t;
    out.gw_pause_end = timeout_t;
    return out;
  }
  out.success = true;
  out.t_end = out.t_complete_arrive;
  out.gw_pause_end = out.t_complete_arrive;
  return out;
}

void commit_handover(Session& session, const HandoverOutcome& outcome) {
  if (outcome.success) {
    session.pair = outcome.new_pair;
    session.forward_sids = outcome.new_forward;
    session.reverse_sids = outcome.new_reverse;
    session.last_handover_t = outcome.t_end;
  }
  // a cancelled handover leaves every field as it was
  session.state = SessionState::Active;
}

HeartbeatResult heartbeat_check(Session& session, ControlPlaneEnv& env, double t,
                                const HandoverConfig& cfg) {
  if (session.state != SessionState::Active) return HeartbeatResult::Miss;
  auto up = env.tunnel_delay_ms(session.user, session.reverse_sids, t);
  auto down = env.tunnel_delay_ms(session.gateway, session.forward_sids, t);
  if (up && down) {
    session.heartbeat_misses = 0;
    return HeartbeatResult::Ok;
  }
  ++session.heartbeat_misses;
  if (session.heartbeat_misses >= cfg.heartbeat_miss_threshold) {
    session.state = SessionState::Lost;
    session.heartbeat_misses = 0;
    return HeartbeatResult::TriggerReregister;
  }
  return HeartbeatResult::Miss;
}

}  // namespace srv6
}  // namespace nsb
