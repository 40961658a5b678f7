#ifndef NSB_LINKMODEL_HPP
#define NSB_LINKMODEL_HPP

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nsb/orbit.hpp"

namespace nsb {
namespace linkmodel {

constexpr double kSpeedOfLightKmS = 299792.458;

struct LinkAttributes {
  double rate_mbps = 0;
  double delay_ms = 0;
  double loss_fraction = 0;

  bool operator==(const LinkAttributes&) const = default;
};

// Parameters of the slant-range bitrate model, normalized at zenith.
struct SlantRateParams {
  double zenith_rate_mbps = 0;
  double zenith_snr_db = 0;
  double zenith_atmos_loss_db = 0;
  double altitude_km = 0;
};

enum class EndpointKind { Satellite, Gateway, User };

// What a physical-layer model sees for one candidate link.
struct PhyContext {
  orbit::Vec3 endpoint1_pos;
  orbit::Vec3 endpoint2_pos;
  EndpointKind endpoint1_kind = EndpointKind::Satellite;
  EndpointKind endpoint2_kind = EndpointKind::Satellite;
  double slant_range_km = 0;
  double time_s = 0;
};

// Grid+ inter-satellite topology: intra-plane ring plus same-index links
// between adjacent planes; Star constellations get no seam links between
// the first and last plane.
std::vector<std::pair<orbit::SatelliteId, orbit::SatelliteId>> grid_plus_isls(
    const orbit::WalkerParams& params);

// All (ground node, satellite) pairs at or above the minimum elevation.
// The antenna filter can veto individual pairs; by default all pairs are
// kept (serving-satellite selection is a control-plane decision).
using AntennaFilter = std::function<bool(const orbit::GroundNode&,
                                         const orbit::SatelliteId&,
                                         const PhyContext&)>;
std::vector<std::pair<const orbit::GroundNode*, orbit::SatelliteId>>
visible_links(const std::vector<orbit::GroundNode>& ground_nodes,
              const orbit::ConstellationState& constellation, double t,
              double min_elev_deg, const AntennaFilter& filter = nullptr);

// Shannon-normalized bitrate at slant range L; equals zenith_rate_mbps at
// L = altitude and decreases strictly with L. Throws std::domain_error for
// L below the altitude.
double slant_range_bitrate_mbps(double slant_range_km, const SlantRateParams& p);

double propagation_delay_ms(double distance_km);

// A named model computing one attribute from the link context.
using PhyModel = std::function<double(const PhyContext&)>;

struct PhyModelSet {
  std::string rate_model_name;
  PhyModel rate;
  std::string loss_model_name;
  PhyModel loss;
};

PhyModel make_fixed_model(double value);
PhyModel make_slant_rate_model(const SlantRateParams& params);

// rate from the rate model, delay from propagation, loss from the loss
// model. A model returning a non-finite value aborts the pipeline with an
// error identifying the model by name.
LinkAttributes phy_pipeline(const PhyContext& ctx, const PhyModelSet& models);

}  // namespace linkmodel
}  // namespace nsb

#endif
