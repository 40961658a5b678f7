#include "nsb/orbit.hpp"

#include <algorithm>

#include "nsb/util.hpp"

namespace nsb {
namespace orbit {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
constexpr double kRadToDeg = 180.0 / M_PI;
}  // namespace

Vec3 rotate_z(const Vec3& v, double angle_rad) {
  double c = std::cos(angle_rad), s = std::sin(angle_rad);
  return {v.x * c - v.y * s, v.x * s + v.y * c, v.z};
}

void WalkerParams::validate() const {
  if (!(altitude_km > 0)) throw ConfigError("altitude_km must be > 0");
  if (num_planes < 1) throw ConfigError("num_planes must be >= 1");
  if (sats_per_plane < 1) throw ConfigError("sats_per_plane must be >= 1");
  if (phasing_factor < 0 || phasing_factor >= num_planes) {
    throw ConfigError("phasing_factor must be in [0, num_planes)");
  }
  if (!(inclination_deg > 0 && inclination_deg <= 180)) {
    throw ConfigError("inclination_deg must be in (0, 180]");
  }
  if (!(raan_spread_deg > 0 && raan_spread_deg <= 360)) {
    throw ConfigError("raan_spread_deg must be in (0, 360]");
  }
}

ConstellationState generate_walker(const WalkerParams& params) {
  params.validate();
  ConstellationState state;
  state.params = params;
  const int planes = params.num_planes;
  const int per_plane = params.sats_per_plane;
  const double raan_step = params.raan_spread_deg / planes * kDegToRad;
  const double in_plane_step = 360.0 / per_plane * kDegToRad;
  const double phase_step =
      params.phasing_factor * 360.0 / (planes * per_plane) * kDegToRad;
  state.sats.reserve(params.total_satellites());
  for (int p = 0; p < planes; ++p) {
    for (int i = 0; i < per_plane; ++i) {
      SatelliteElements e;
      e.raan_rad = p * raan_step;
      e.anomaly0_rad = i * in_plane_step + p * phase_step;
      state.sats.push_back(e);
    }
  }
  return state;
}

Vec3 propagate_one(const ConstellationState& state, int flat, double t) {
  const auto& e = state.sats[flat];
  const double r = state.params.shell_radius_km();
  const double inc = state.params.inclination_deg * kDegToRad;
  const double u = e.anomaly0_rad + state.mean_motion_rad_s() * t;
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(e.raan_rad), so = std::sin(e.raan_rad);
  const double ci = std::cos(inc), si = std::sin(inc);
  // inertial position for a circular orbit (argument of latitude u)
  Vec3 eci{r * (cu * co - su * so * ci), r * (cu * so + su * co * ci),
           r * su * si};
  // epoch-zero Greenwich angle is 0, so ECEF = R_z(-theta) * ECI
  return rotate_z(eci, -kEarthRotationRadS * t);
}

std::vector<Vec3> propagate(const ConstellationState& state, double t) {
  std::vector<Vec3> out(state.sats.size());
  for (size_t i = 0; i < state.sats.size(); ++i) {
    out[i] = propagate_one(state, static_cast<int>(i), t);
  }
  return out;
}

Vec3 ground_ecef(const GroundNode& node) {
  const double lat = node.latitude_deg * kDegToRad;
  const double lon = node.longitude_deg * kDegToRad;
  return {kEarthRadiusKm * std::cos(lat) * std::cos(lon),
          kEarthRadiusKm * std::cos(lat) * std::sin(lon),
          kEarthRadiusKm * std::sin(lat)};
}

double slant_range_km(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

double elevation_angle_deg(const Vec3& sat, const Vec3& ground) {
  Vec3 up = ground * (1.0 / ground.norm());
  Vec3 los = sat - ground;
  double d = los.norm();
  if (d == 0) return 90.0;
  double s = std::clamp(up.dot(los) / d, -1.0, 1.0);
  return std::asin(s) * kRadToDeg;
}

double slant_range_at_elevation_km(double elevation_deg, double altitude_km) {
  const double e = elevation_deg * kDegToRad;
  const double re = kEarthRadiusKm;
  const double rs = re + altitude_km;
  const double ce = std::cos(e);
  return std::sqrt(rs * rs - re * re * ce * ce) - re * std::sin(e);
}

double remaining_visibility_s(const ConstellationState& state, int flat,
                              const GroundNode& ground, double t,
                              double min_elev_deg, double scan_step_s,
                              double horizon_s) {
  const Vec3 g = ground_ecef(ground);
  auto visible_at = [&](double when) {
    return elevation_angle_deg(propagate_one(state, flat, when), g) >=
           min_elev_deg;
  };
  if (!visible_at(t)) return 0.0;
  double delta = 0.0;
  while (delta + scan_step_s <= horizon_s) {
    if (!visible_at(t + delta + scan_step_s)) break;
    delta += scan_step_s;
  }
  return delta;
}

}  // namespace orbit
}  // namespace nsb
