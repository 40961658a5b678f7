#include "nsb/linkmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace nsb {
namespace linkmodel {

std::vector<std::pair<orbit::SatelliteId, orbit::SatelliteId>> grid_plus_isls(
    const orbit::WalkerParams& params) {
  params.validate();
  const int planes = params.num_planes;
  const int per_plane = params.sats_per_plane;
  std::vector<std::pair<orbit::SatelliteId, orbit::SatelliteId>> out;

  // intra-plane ring; S < 3 degenerates to max(S-1, 0) links to avoid
  // duplicate edges
  for (int p = 0; p < planes; ++p) {
    int ring_links = per_plane >= 3 ? per_plane : std::max(per_plane - 1, 0);
    for (int i = 0; i < ring_links; ++i) {
      out.push_back({{p, i}, {p, (i + 1) % per_plane}});
    }
  }

  // inter-plane links between same in-plane index of adjacent planes;
  // the first/last plane pair of a Star pattern is the seam and gets none
  for (int p = 0; p < planes; ++p) {
    int q = (p + 1) % planes;
    if (q <= p) {
      if (params.pattern == orbit::Pattern::Star) continue;  // seam
      if (planes <= 2) continue;                      // pair already emitted
    }
    if (params.pattern == orbit::Pattern::Star && p == 0 && q == planes - 1) continue;
    if (q == p) continue;  // single plane
    for (int i = 0; i < per_plane; ++i) {
      out.push_back({{p, i}, {q, i}});
    }
  }
  return out;
}

std::vector<std::pair<const orbit::GroundNode*, orbit::SatelliteId>>
visible_links(const std::vector<orbit::GroundNode>& ground_nodes,
              const orbit::ConstellationState& constellation, double t,
              double min_elev_deg, const AntennaFilter& filter) {
  std::vector<std::pair<const orbit::GroundNode*, orbit::SatelliteId>> out;
  const auto positions = orbit::propagate(constellation, t);
  const int per_plane = constellation.params.sats_per_plane;
  for (const auto& g : ground_nodes) {
    const orbit::Vec3 gpos = orbit::ground_ecef(g);
    for (size_t flat = 0; flat < positions.size(); ++flat) {
      if (orbit::elevation_angle_deg(positions[flat], gpos) < min_elev_deg)
        continue;
      auto sid = orbit::SatelliteId::from_flat(static_cast<int>(flat), per_plane);
      if (filter) {
        PhyContext ctx;
        ctx.endpoint1_pos = positions[flat];
        ctx.endpoint2_pos = gpos;
        ctx.endpoint1_kind = EndpointKind::Satellite;
        ctx.endpoint2_kind = g.kind == orbit::GroundKind::Gateway
                                 ? EndpointKind::Gateway
                                 : EndpointKind::User;
        ctx.slant_range_km = orbit::slant_range_km(positions[flat], gpos);
        ctx.time_s = t;
        if (!filter(g, sid, ctx)) continue;
      }
      out.push_back({&g, sid});
    }
  }
  return out;
}

double slant_range_bitrate_mbps(double slant_range_km,
                                const SlantRateParams& p) {
  const double h = p.altitude_km;
  if (slant_range_km < h * (1.0 - 1e-9)) {
    throw std::domain_error("slant range " + std::to_string(slant_range_km) +
                            " km below altitude " + std::to_string(h) + " km");
  }
  const double l = std::max(slant_range_km, h);
  const double snr_lin = std::pow(10.0, p.zenith_snr_db / 10.0);
  const double free_space = (h / l) * (h / l);
  const double atmos =
      std::pow(10.0, -(p.zenith_atmos_loss_db / 10.0) * (l / h - 1.0));
  const double attenuation = free_space * atmos;
  // ratio first: at L = H it is exactly 1 and the zenith rate is returned
  // bit-exactly
  return p.zenith_rate_mbps * (std::log2(1.0 + snr_lin * attenuation) /
                               std::log2(1.0 + snr_lin));
}

double propagation_delay_ms(double distance_km) {
  return distance_km / kSpeedOfLightKmS * 1000.0;
}

PhyModel make_fixed_model(double value) {
  return [value](const PhyContext&) { return value; };
}

PhyModel make_slant_rate_model(const SlantRateParams& params) {
  return [params](const PhyContext& ctx) {
    return slant_range_bitrate_mbps(ctx.slant_range_km, params);
  };
}

LinkAttributes phy_pipeline(const PhyContext& ctx, const PhyModelSet& models) {
  LinkAttributes attrs;
  attrs.rate_mbps = models.rate(ctx);
  if (!std::isfinite(attrs.rate_mbps)) {
    throw std::runtime_error("phy model '" + models.rate_model_name +
                             "' returned a non-finite rate");
  }
  attrs.delay_ms = propagation_delay_ms(ctx.slant_range_km);
  attrs.loss_fraction = models.loss ? models.loss(ctx) : 0.0;
  if (!std::isfinite(attrs.loss_fraction)) {
    throw std::runtime_error("phy model '" + models.loss_model_name +
                             "' returned a non-finite loss");
  }
  return attrs;
}

}  // namespace linkmodel
}  // namespace nsb
