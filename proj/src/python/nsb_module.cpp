#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nsb/harness.hpp"
#include "nsb/linkmodel.hpp"
#include "nsb/orbit.hpp"
#include "nsb/scenario.hpp"
#include "nsb/srv6.hpp"

namespace py = pybind11;
using namespace nsb;

namespace {

orbit::WalkerParams walker_from_kwargs(double altitude_km, double inclination_deg,
                                       int num_planes, int sats_per_plane,
                                       int phasing_factor, const std::string& pattern,
                                       double raan_spread_deg) {
  orbit::WalkerParams p;
  p.altitude_km = altitude_km;
  p.inclination_deg = inclination_deg;
  p.num_planes = num_planes;
  p.sats_per_plane = sats_per_plane;
  p.phasing_factor = phasing_factor;
  if (pattern == "star") {
    p.pattern = orbit::Pattern::Star;
  } else if (pattern == "delta") {
    p.pattern = orbit::Pattern::Delta;
  } else {
    throw std::invalid_argument("pattern must be 'star' or 'delta'");
  }
  p.raan_spread_deg = raan_spread_deg > 0
                          ? raan_spread_deg
                          : (p.pattern == orbit::Pattern::Star ? 180.0 : 360.0);
  return p;
}

}  // namespace

PYBIND11_MODULE(_nsb, m) {
  m.doc() = "desk-scale LEO constellation emulation toolkit";
  m.attr("__version__") = "0.1.0";

  py::class_<orbit::WalkerParams>(m, "WalkerParams")
      .def(py::init(&walker_from_kwargs), py::arg("altitude_km"),
           py::arg("inclination_deg"), py::arg("num_planes"),
           py::arg("sats_per_plane"), py::arg("phasing_factor") = 1,
           py::arg("pattern") = "star", py::arg("raan_spread_deg") = -1.0)
      .def_readonly("altitude_km", &orbit::WalkerParams::altitude_km)
      .def_readonly("inclination_deg", &orbit::WalkerParams::inclination_deg)
      .def_readonly("num_planes", &orbit::WalkerParams::num_planes)
      .def_readonly("sats_per_plane", &orbit::WalkerParams::sats_per_plane)
      .def_readonly("phasing_factor", &orbit::WalkerParams::phasing_factor)
      .def("total_satellites", &orbit::WalkerParams::total_satellites);

  py::class_<orbit::GroundNode>(m, "GroundNode")
      .def(py::init([](const std::string& name, const std::string& kind,
                       double latitude_deg, double longitude_deg, int max_antennas) {
             orbit::GroundNode g;
             g.name = name;
             if (kind == "gateway") {
               g.kind = orbit::GroundKind::Gateway;
             } else if (kind == "user") {
               g.kind = orbit::GroundKind::User;
             } else {
               throw std::invalid_argument("kind must be 'gateway' or 'user'");
             }
             g.latitude_deg = latitude_deg;
             g.longitude_deg = longitude_deg;
             g.max_antennas = max_antennas;
             return g;
           }),
           py::arg("name"), py::arg("kind"), py::arg("latitude_deg"),
           py::arg("longitude_deg"), py::arg("max_antennas") = 1)
      .def_readonly("name", &orbit::GroundNode::name)
      .def_readonly("latitude_deg", &orbit::GroundNode::latitude_deg)
      .def_readonly("longitude_deg", &orbit::GroundNode::longitude_deg);

  m.def(
      "generate_walker",
      [](const orbit::WalkerParams& params) { return orbit::generate_walker(params); },
      py::arg("params"));

  py::class_<orbit::ConstellationState>(m, "ConstellationState")
      .def("sat_name", &orbit::ConstellationState::sat_name)
      .def("period_s", &orbit::ConstellationState::period_s)
      .def("__len__",
           [](const orbit::ConstellationState& s) { return s.sats.size(); });

  m.def(
      "propagate",
      [](const orbit::ConstellationState& state, double t) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& p : orbit::propagate(state, t)) {
          out.emplace_back(p.x, p.y, p.z);
        }
        return out;
      },
      py::arg("state"), py::arg("t"),
      "ECEF positions (km) of every satellite at time t");

  m.def(
      "orbital_period_s",
      [](double altitude_km) {
        double r = orbit::kEarthRadiusKm + altitude_km;
        return 2.0 * M_PI * std::sqrt(r * r * r / orbit::kMuKm3S2);
      },
      py::arg("altitude_km"));

  m.def(
      "elevation_angle_deg",
      [](const orbit::ConstellationState& state, int flat, const orbit::GroundNode& g,
         double t) {
        return orbit::elevation_angle_deg(orbit::propagate_one(state, flat, t),
                                          orbit::ground_ecef(g));
      },
      py::arg("state"), py::arg("sat_index"), py::arg("ground"), py::arg("t"));

  m.def("slant_range_at_elevation_km", &orbit::slant_range_at_elevation_km,
        py::arg("elevation_deg"), py::arg("altitude_km"));

  m.def(
      "remaining_visibility_s",
      [](const orbit::ConstellationState& state, int flat, const orbit::GroundNode& g,
         double t, double min_elev_deg, double scan_step_s, double horizon_s) {
        return orbit::remaining_visibility_s(state, flat, g, t, min_elev_deg,
                                             scan_step_s, horizon_s);
      },
      py::arg("state"), py::arg("sat_index"), py::arg("ground"), py::arg("t"),
      py::arg("min_elev_deg") = 25.0, py::arg("scan_step_s") = 5.0,
      py::arg("horizon_s") = 900.0);

  m.def(
      "grid_plus_isl_count",
      [](const orbit::WalkerParams& params) {
        return linkmodel::grid_plus_isls(params).size();
      },
      py::arg("params"));

  m.def(
      "slant_range_bitrate_mbps",
      [](double slant_range_km, double zenith_rate_mbps, double zenith_snr_db,
         double zenith_atmos_loss_db, double altitude_km) {
        linkmodel::SlantRateParams p;
        p.zenith_rate_mbps = zenith_rate_mbps;
        p.zenith_snr_db = zenith_snr_db;
        p.zenith_atmos_loss_db = zenith_atmos_loss_db;
        p.altitude_km = altitude_km;
        return linkmodel::slant_range_bitrate_mbps(slant_range_km, p);
      },
      py::arg("slant_range_km"), py::arg("zenith_rate_mbps"),
      py::arg("zenith_snr_db"), py::arg("zenith_atmos_loss_db"),
      py::arg("altitude_km"));

  m.def("propagation_delay_ms", &linkmodel::propagation_delay_ms,
        py::arg("distance_km"));

  py::class_<srv6::CandidatePair>(m, "CandidatePair")
      .def(py::init([](const std::string& gss, const std::string& uss,
                       double gss_visibility_s, double uss_visibility_s,
                       double gss_access_delay_ms, double uss_access_delay_ms,
                       double gss_rate_mbps, double uss_rate_mbps, int orbit_hops) {
             srv6::CandidatePair p;
             p.gss = gss;
             p.uss = uss;
             p.gss_visibility_s = gss_visibility_s;
             p.uss_visibility_s = uss_visibility_s;
             p.gss_access_delay_ms = gss_access_delay_ms;
             p.uss_access_delay_ms = uss_access_delay_ms;
             p.gss_rate_mbps = gss_rate_mbps;
             p.uss_rate_mbps = uss_rate_mbps;
             p.orbit_hops = orbit_hops;
             return p;
           }),
           py::arg("gss"), py::arg("uss"), py::arg("gss_visibility_s") = 0.0,
           py::arg("uss_visibility_s") = 0.0, py::arg("gss_access_delay_ms") = 0.0,
           py::arg("uss_access_delay_ms") = 0.0, py::arg("gss_rate_mbps") = 0.0,
           py::arg("uss_rate_mbps") = 0.0, py::arg("orbit_hops") = 0)
      .def_readonly("gss", &srv6::CandidatePair::gss)
      .def_readonly("uss", &srv6::CandidatePair::uss)
      .def_readonly("orbit_hops", &srv6::CandidatePair::orbit_hops);

  py::class_<srv6::HandoverConfig>(m, "HandoverConfig")
      .def(py::init([](double t_lt_s, double t_el_s, double control_interval_s,
                       double t_ho_s) {
             srv6::HandoverConfig c;
             c.t_lt_s = t_lt_s;
             c.t_el_s = t_el_s;
             c.control_interval_s = control_interval_s;
             c.t_ho_s = t_ho_s;
             return c;
           }),
           py::arg("t_lt_s") = 60.0, py::arg("t_el_s") = 15.0,
           py::arg("control_interval_s") = 5.0, py::arg("t_ho_s") = 0.080)
      .def_readonly("t_lt_s", &srv6::HandoverConfig::t_lt_s);

  m.def(
      "filter_candidates",
      [](std::vector<srv6::CandidatePair> pairs, const std::vector<int>& sequence,
         const srv6::HandoverConfig& cfg) -> py::object {
        auto result = srv6::filter_candidates(std::move(pairs), sequence, cfg);
        if (!result) return py::none();
        return py::cast(*result);
      },
      py::arg("pairs"), py::arg("sequence"),
      py::arg("config") = srv6::HandoverConfig{});

  m.def(
      "generate_scenario",
      [](const std::string& generator_config_json, const std::string& out_dir) {
        auto stats = harness::generate_scenario_dir(
            njson::parse(generator_config_json), out_dir);
        py::dict d;
        d["satellites"] = stats.satellites;
        d["epoch_files"] = stats.epoch_files;
        d["oracle_tasks"] = stats.oracle_tasks;
        d["reachability_gaps"] = stats.reachability_gaps;
        return d;
      },
      py::arg("generator_config_json"), py::arg("out_dir"));

  m.def(
      "run_experiment",
      [](const std::string& scenario_dir, const std::string& strategy,
         double duration_s, uint64_t seed, const std::string& out_dir) {
        harness::ExperimentConfig cfg;
        cfg.scenario_dir = scenario_dir;
        cfg.handover = harness::parse_strategy(strategy);
        cfg.duration_s = duration_s;
        cfg.seed = seed;
        auto result = harness::run_experiment(cfg);
        if (!out_dir.empty()) harness::write_outputs(result, out_dir);
        return result.summary.dump();
      },
      py::arg("scenario_dir"), py::arg("strategy") = "e2e:1,2,4",
      py::arg("duration_s") = 0.0, py::arg("seed") = 1,
      py::arg("out_dir") = "",
      "Runs the experiment and returns the summary as a JSON string");
}
