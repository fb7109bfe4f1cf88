#include "gridwatch/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

namespace {

constexpr double kTwoPi = 6.283185307179586477;
constexpr double kLoadNoiseRho = 0.9;
constexpr double kExportRho = 0.98;

struct Ar1 {
  // Autocorrelated noise with stationary standard deviation `sigma`.
  Ar1(double rho, double sigma, Rng& rng) : rho_(rho), sigma_(sigma) {
    state_ = sigma * rng.normal();
  }
  double step(Rng& rng) {
    state_ = rho_ * state_ + sigma_ * std::sqrt(1.0 - rho_ * rho_) * rng.normal();
    return state_;
  }
  double rho_, sigma_, state_;
};

}  // namespace

void LoadProfileParams::validate() const {
  if (!(base_mw > 0.0)) throw ConfigError("load profile: base_mw must be > 0");
  for (double a : {daily_amp, weekly_amp, seasonal_amp}) {
    if (a < 0.0 || a >= 1.0) throw ConfigError("load profile: amplitudes must be in [0, 1)");
  }
  if (noise_sigma < 0.0) throw ConfigError("load profile: noise_sigma must be >= 0");
  if (daily_amp + weekly_amp + seasonal_amp + 3.0 * noise_sigma >= 1.0) {
    throw ConfigError("load profile: amplitudes + 3*noise_sigma must stay below 1 to keep loads positive");
  }
}

void DispatchParams::validate(const GridSpec& grid) const {
  if (export_fraction < -0.3 || export_fraction > 0.3) {
    throw ConfigError("dispatch: export_fraction must be in [-0.3, 0.3]");
  }
  if (export_sigma < 0.0) throw ConfigError("dispatch: export_sigma must be >= 0");
  if (smoothing_hours < 0) throw ConfigError("dispatch: smoothing_hours must be >= 0");
  if (dispersion < 0.0) throw ConfigError("dispatch: dispersion must be >= 0");
  if (jitter_rho < 0.0 || jitter_rho >= 1.0) throw ConfigError("dispatch: jitter_rho must be in [0, 1)");
  // A total order over the kinds present: every kind ranked, no two present
  // kinds sharing a rank.
  std::map<PlantKind, int> present;
  for (const auto& p : grid.plants) {
    const auto it = merit_order.find(p.kind);
    if (it == merit_order.end()) {
      throw ConfigError("dispatch: merit_order missing rank for kind '" + to_string(p.kind) + "'");
    }
    present[p.kind] = it->second;
  }
  std::vector<int> distinct;
  for (const auto& [kind, rank] : present) distinct.push_back(rank);
  std::sort(distinct.begin(), distinct.end());
  if (std::adjacent_find(distinct.begin(), distinct.end()) != distinct.end()) {
    throw ConfigError("dispatch: merit_order must be a total order over kinds present in the grid");
  }
}

SeriesFrame gen_loads(const GridSpec& grid, int years, const std::vector<LoadProfileParams>& params) {
  grid.validate();
  if (years < 1) throw ConfigError("gen_loads: years must be >= 1");
  if (params.size() != grid.load_count()) {
    throw ConfigError("gen_loads: expected one LoadProfileParams per load bus");
  }
  for (const auto& p : params) p.validate();

  const std::int64_t rows = static_cast<std::int64_t>(years) * kHoursPerYear;
  SeriesFrame frame;
  frame.start_index = 0;
  frame.columns = grid.load_bus_ids;
  frame.values.resize(rows, static_cast<std::int64_t>(grid.load_count()));

  for (std::size_t c = 0; c < grid.load_count(); ++c) {
    const auto& p = params[c];
    Rng rng(derive_seed(p.seed, grid.load_bus_ids[c]));
    const double phase_daily = rng.uniform() * kTwoPi;
    const double phase_weekly = rng.uniform() * kTwoPi;
    const double phase_seasonal = rng.uniform() * kTwoPi;
    Ar1 noise(kLoadNoiseRho, p.noise_sigma, rng);
    const double floor = 0.01 * p.base_mw;
    for (std::int64_t t = 0; t < rows; ++t) {
      const double modulation =
          p.daily_amp * std::sin(kTwoPi * static_cast<double>(t % 24) / 24.0 + phase_daily) +
          p.weekly_amp * std::sin(kTwoPi * static_cast<double>(t % 168) / 168.0 + phase_weekly) +
          p.seasonal_amp * std::sin(kTwoPi * static_cast<double>(t % kHoursPerYear) /
                                        static_cast<double>(kHoursPerYear) +
                                    phase_seasonal);
      const double value = p.base_mw * (1.0 + modulation + noise.step(rng));
      frame.values(t, static_cast<std::int64_t>(c)) = std::max(value, floor);
    }
  }
  return frame;
}

DispatchResult dispatch_generation(const GridSpec& grid, const SeriesFrame& loads,
                                   const DispatchParams& params) {
  grid.validate();
  params.validate(grid);
  if (loads.columns != grid.load_bus_ids) {
    throw FrameStructureError("dispatch: loads frame columns must match grid load buses");
  }
  const std::int64_t rows = loads.rows();
  if (rows < 1 || rows % kHoursPerYear != 0) {
    throw ConfigError("dispatch: series length must be a positive multiple of 8736 hours");
  }
  if (!loads.values.allFinite()) throw DataError("dispatch: loads contain non-finite values");

  const std::size_t n_plants = grid.plant_count();
  std::vector<std::size_t> nuclear, dispatchable;
  for (std::size_t i = 0; i < n_plants; ++i) {
    (grid.plants[i].kind == PlantKind::nuclear ? nuclear : dispatchable).push_back(i);
  }
  // Residual allocation order: cheapest kind first, spec order within a kind.
  std::vector<std::size_t> merit = dispatchable;
  std::stable_sort(merit.begin(), merit.end(), [&](std::size_t a, std::size_t b) {
    return params.merit_order.at(grid.plants[a].kind) < params.merit_order.at(grid.plants[b].kind);
  });

  Rng export_rng(derive_seed(params.seed, "export"));
  Ar1 export_noise(kExportRho, params.export_sigma, export_rng);
  std::vector<double> export_factor(static_cast<std::size_t>(rows));
  for (std::int64_t t = 0; t < rows; ++t) {
    export_factor[static_cast<std::size_t>(t)] =
        std::clamp(params.export_fraction + export_noise.step(export_rng), -0.45, 0.45);
  }
  if (params.smoothing_hours > 0) {
    const int w = params.smoothing_hours + 1;
    std::vector<double> smoothed(export_factor.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < export_factor.size(); ++t) {
      acc += export_factor[t];
      if (t >= static_cast<std::size_t>(w)) acc -= export_factor[t - static_cast<std::size_t>(w)];
      smoothed[t] = acc / static_cast<double>(std::min<std::size_t>(t + 1, static_cast<std::size_t>(w)));
    }
    export_factor = std::move(smoothed);
  }

  std::vector<Rng> jitter_rng;
  std::vector<Ar1> jitter;
  jitter_rng.reserve(dispatchable.size());
  jitter.reserve(dispatchable.size());
  for (const std::size_t i : dispatchable) {
    jitter_rng.emplace_back(derive_seed(params.seed, "jitter:" + grid.plants[i].id));
    jitter.emplace_back(params.jitter_rho, params.dispersion, jitter_rng.back());
  }

  SeriesFrame gen;
  gen.start_index = loads.start_index;
  for (const auto& p : grid.plants) gen.columns.push_back(p.id);
  gen.values.setZero(rows, static_cast<std::int64_t>(n_plants));

  std::vector<double> used(n_plants, 0.0);
  std::vector<double> alloc(dispatchable.size(), 0.0);

  for (std::int64_t t = 0; t < rows; ++t) {
    const std::int64_t hour_of_year = t % kHoursPerYear;
    if (hour_of_year == 0) std::fill(used.begin(), used.end(), 0.0);
    const double hours_left = static_cast<double>(kHoursPerYear - hour_of_year);

    const double total_load = loads.values.row(t).sum();
    double demand = total_load * (1.0 + export_factor[static_cast<std::size_t>(t)]);
    if (demand < 0.0) demand = 0.0;

    // Nuclear runs flat; it only deviates when demand falls below its output.
    double nuclear_total = 0.0;
    for (const std::size_t i : nuclear) {
      nuclear_total += std::min(grid.plants[i].annual_energy / static_cast<double>(kHoursPerYear),
                                grid.plants[i].rated_power);
    }
    double nuclear_scale = 1.0;
    if (nuclear_total > demand && nuclear_total > 0.0) nuclear_scale = demand / nuclear_total;
    for (const std::size_t i : nuclear) {
      const double out = nuclear_scale *
                         std::min(grid.plants[i].annual_energy / static_cast<double>(kHoursPerYear),
                                  grid.plants[i].rated_power);
      gen.values(t, static_cast<std::int64_t>(i)) = out;
      used[i] += out;
    }
    double residual = demand - nuclear_scale * nuclear_total;
    if (residual < 0.0) residual = 0.0;

    double capacity = 0.0;
    for (const std::size_t i : dispatchable) capacity += grid.plants[i].rated_power;
    if (residual > capacity + 1e-9) {
      throw DataError("dispatch infeasible at hour " + std::to_string(loads.start_index + t) +
                      ": residual demand " + std::to_string(residual) +
                      " MW exceeds dispatchable capacity " + std::to_string(capacity) + " MW");
    }

    // Pace-to-budget weights with clipped multiplicative jitter.
    double weight_sum = 0.0;
    for (std::size_t d = 0; d < dispatchable.size(); ++d) {
      const std::size_t i = dispatchable[d];
      const double remaining = std::max(grid.plants[i].annual_energy - used[i], 0.0);
      const double pace = remaining / hours_left;
      const double eta = std::clamp(jitter[d].step(jitter_rng[d]), -1.0, 4.0);
      alloc[d] = std::max(pace * (1.0 + eta), 0.0);
      weight_sum += alloc[d];
    }
    if (weight_sum <= 0.0) {
      // Degenerate: budgets exhausted or all jitter floored; fall back to capacity shares.
      for (std::size_t d = 0; d < dispatchable.size(); ++d) {
        alloc[d] = grid.plants[dispatchable[d]].rated_power;
        weight_sum += alloc[d];
      }
    }

    double assigned = 0.0;
    const double scale0 = residual / weight_sum;
    for (std::size_t d = 0; d < dispatchable.size(); ++d) {
      alloc[d] = std::min(alloc[d] * scale0, grid.plants[dispatchable[d]].rated_power);
      assigned += alloc[d];
    }
    // Re-scale unsaturated plants until the balance closes, then push any
    // leftover through the merit order.
    for (int pass = 0; pass < 8 && residual - assigned > 1e-9; ++pass) {
      double headroom_weight = 0.0;
      for (std::size_t d = 0; d < dispatchable.size(); ++d) {
        if (alloc[d] < grid.plants[dispatchable[d]].rated_power - 1e-12) headroom_weight += alloc[d];
      }
      if (headroom_weight <= 0.0) break;
      const double boost = (residual - assigned) / headroom_weight;
      assigned = 0.0;
      for (std::size_t d = 0; d < dispatchable.size(); ++d) {
        const double rated = grid.plants[dispatchable[d]].rated_power;
        if (alloc[d] < rated - 1e-12) alloc[d] = std::min(alloc[d] * (1.0 + boost), rated);
        assigned += alloc[d];
      }
    }
    double leftover = residual - assigned;
    for (const std::size_t i : merit) {
      if (leftover <= 0.0) break;
      std::size_t d = 0;
      while (dispatchable[d] != i) ++d;
      const double headroom = grid.plants[i].rated_power - alloc[d];
      const double add = std::min(headroom, leftover);
      alloc[d] += add;
      leftover -= add;
    }
    if (leftover < -1e-9) {
      // Overshoot can only come from rounding; trim the largest allocation.
      std::size_t dmax = 0;
      for (std::size_t d = 1; d < dispatchable.size(); ++d) {
        if (alloc[d] > alloc[dmax]) dmax = d;
      }
      alloc[dmax] = std::max(alloc[dmax] + leftover, 0.0);
    }

    for (std::size_t d = 0; d < dispatchable.size(); ++d) {
      const std::size_t i = dispatchable[d];
      gen.values(t, static_cast<std::int64_t>(i)) = alloc[d];
      used[i] += alloc[d];
    }
  }

  return {std::move(gen), std::move(export_factor)};
}

SeriesFrame combine_frames(const GridSpec& grid, const SeriesFrame& loads,
                           const SeriesFrame& generation) {
  if (loads.rows() != generation.rows()) {
    throw FrameStructureError("combine: loads and generation row counts differ");
  }
  if (loads.columns != grid.load_bus_ids) {
    throw FrameStructureError("combine: loads columns do not match grid");
  }
  std::vector<std::string> plant_ids;
  for (const auto& p : grid.plants) plant_ids.push_back(p.id);
  if (generation.columns != plant_ids) {
    throw FrameStructureError("combine: generation columns do not match grid");
  }
  SeriesFrame out;
  out.start_index = loads.start_index;
  out.columns = grid.column_ids();
  out.values.resize(loads.rows(), loads.cols() + generation.cols());
  out.values.leftCols(loads.cols()) = loads.values;
  out.values.rightCols(generation.cols()) = generation.values;
  return out;
}

}  // namespace gridwatch
