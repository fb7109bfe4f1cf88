#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "gridwatch/grid.hpp"

namespace gridwatch {

/// Shape of one synthetic load series: a base level modulated by daily,
/// weekly and seasonal sinusoids plus autocorrelated noise. Amplitudes and
/// noise are fractions of the base.
struct LoadProfileParams {
  double base_mw = 100.0;
  double daily_amp = 0.2;
  double weekly_amp = 0.05;
  double seasonal_amp = 0.15;
  double noise_sigma = 0.03;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Parameters of the simplified dispatch that stands in for the source
/// dataset's optimal power flow. Border exchange is a smooth stochastic
/// series around export_fraction, so generation never equals load exactly.
struct DispatchParams {
  double export_fraction = 0.0;  // mean export as a fraction of load, in [-0.3, 0.3]
  double export_sigma = 0.0;     // stationary std of the export series
  std::map<PlantKind, int> merit_order = {
      {PlantKind::nuclear, 0}, {PlantKind::coal, 1}, {PlantKind::gas, 2}, {PlantKind::hydro, 3}};
  int smoothing_hours = 0;  // trailing moving average applied to the export series
  // Scale and persistence of the per-plant dispatch jitter. The jitter is
  // what makes dispatchable series erratic on short time scales; the spec's
  // field list leaves its scale implicit, so it is exposed here.
  double dispersion = 0.5;
  double jitter_rho = 0.97;
  std::uint64_t seed = 1;

  void validate(const GridSpec& grid) const;
};

/// Generates `years` whole data years of load series, one column per load
/// bus in grid order. `params` is aligned with grid.load_bus_ids. Each
/// column draws its phases and noise from a seed derived from
/// (params.seed, column id), so generation is deterministic and
/// order-independent.
SeriesFrame gen_loads(const GridSpec& grid, int years, const std::vector<LoadProfileParams>& params);

struct DispatchResult {
  SeriesFrame generation;             // columns = plant ids, grid order
  std::vector<double> export_factor;  // realized e(t); demand = load * (1 + e)
};

/// Allocates generation so that every hour balances total load times
/// (1 + export): nuclear runs flat at annual_energy / 8736, the remaining
/// demand is split across dispatchable plants proportionally to the pace
/// needed to exhaust their remaining annual budget, jittered per plant and
/// clipped to [0, rated]. Residual after clipping goes to plants with
/// headroom in merit order. Demand above total dispatchable capacity at any
/// hour raises an error naming that hour.
DispatchResult dispatch_generation(const GridSpec& grid, const SeriesFrame& loads,
                                   const DispatchParams& params);

/// Concatenates a loads-only and a generation-only frame into the full
/// grid-ordered frame (loads then plants).
SeriesFrame combine_frames(const GridSpec& grid, const SeriesFrame& loads,
                           const SeriesFrame& generation);

}  // namespace gridwatch
