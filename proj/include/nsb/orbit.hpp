#ifndef NSB_ORBIT_HPP
#define NSB_ORBIT_HPP

#include <cmath>
#include <string>
#include <vector>

namespace nsb {
namespace orbit {

// Two-body circular propagation over a spherical Earth.
constexpr double kMuKm3S2 = 398600.4418;
constexpr double kEarthRadiusKm = 6371.0;
constexpr double kEarthRotationRadS = 7.2921159e-5;

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// Rotation about the z axis, used for the inertial->ECEF conversion.
Vec3 rotate_z(const Vec3& v, double angle_rad);

enum class Pattern { Star, Delta };

struct WalkerParams {
  double altitude_km = 0;
  double inclination_deg = 0;
  int num_planes = 0;
  int sats_per_plane = 0;
  int phasing_factor = 1;
  Pattern pattern = Pattern::Star;
  double raan_spread_deg = 180.0;  // 360 for Delta, 180 for Star

  int total_satellites() const { return num_planes * sats_per_plane; }
  double shell_radius_km() const { return kEarthRadiusKm + altitude_km; }
  // throws ConfigError naming the offending field
  void validate() const;
};

struct SatelliteId {
  int plane = 0;
  int in_plane_index = 0;

  static SatelliteId from_flat(int flat, int sats_per_plane) {
    return {flat / sats_per_plane, flat % sats_per_plane};
  }
  int flat(int sats_per_plane) const {
    return plane * sats_per_plane + in_plane_index;
  }
  bool operator==(const SatelliteId&) const = default;
};

enum class GroundKind { Gateway, User };

struct GroundNode {
  std::string name;
  GroundKind kind = GroundKind::User;
  double latitude_deg = 0;
  double longitude_deg = 0;
  int max_antennas = 1;
};

struct SatelliteElements {
  double raan_rad = 0;      // right ascension of the ascending node
  double anomaly0_rad = 0;  // argument of latitude at t=0
};

struct ConstellationState {
  WalkerParams params;
  std::vector<SatelliteElements> sats;  // indexed by flat id

  std::string sat_name(int flat) const { return "sat" + std::to_string(flat + 1); }
  double mean_motion_rad_s() const {
    double r = params.shell_radius_km();
    return std::sqrt(kMuKm3S2 / (r * r * r));
  }
  double period_s() const { return 2.0 * M_PI / mean_motion_rad_s(); }
};

ConstellationState generate_walker(const WalkerParams& params);

// ECEF position of one satellite at time t (seconds from scenario start).
Vec3 propagate_one(const ConstellationState& state, int flat, double t);

// All satellite ECEF positions at t, indexed by flat id.
std::vector<Vec3> propagate(const ConstellationState& state, double t);

// Geocentric (spherical-Earth) ECEF position of a ground node; constant in t.
Vec3 ground_ecef(const GroundNode& node);

// Euclidean line-of-sight distance in km.
double slant_range_km(const Vec3& a, const Vec3& b);

// Angle between the local horizon plane at `ground` and the line of sight,
// in degrees, in [-90, 90].
double elevation_angle_deg(const Vec3& sat, const Vec3& ground);

// Closed-form slant range at a given elevation for a satellite at exact
// shell altitude: L = sqrt((Re+H)^2 - Re^2 cos^2 e) - Re sin e.
double slant_range_at_elevation_km(double elevation_deg, double altitude_km);

// Largest delta (a multiple of scan_step_s, capped at horizon_s) such that
// the satellite stays at or above min_elev_deg for all sampled times in
// [t, t+delta]. Returns 0 when the satellite is not visible at t.
double remaining_visibility_s(const ConstellationState& state, int flat,
                              const GroundNode& ground, double t,
                              double min_elev_deg, double scan_step_s,
                              double horizon_s);

}  // namespace orbit
}  // namespace nsb

#endif
