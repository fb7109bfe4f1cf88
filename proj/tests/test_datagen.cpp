#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gridwatch/datagen.hpp"
#include "gridwatch/errors.hpp"
#include "test_support.hpp"

using namespace gridwatch;

namespace {

std::vector<LoadProfileParams> flat_params(std::size_t count, double base) {
  std::vector<LoadProfileParams> params(count);
  for (auto& p : params) {
    p.base_mw = base;
    p.daily_amp = p.weekly_amp = p.seasonal_amp = 0.0;
    p.noise_sigma = 0.0;
  }
  return params;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("zero modulation and zero noise give a constant series at base_mw") {
  const auto grid = gwtest::tiny_grid(2, 2);
  const auto loads = gen_loads(grid, 1, flat_params(2, 123.0));
  REQUIRE(loads.rows() == kHoursPerYear);
  CHECK((loads.values.array() == 123.0).all());
}

TEST_CASE("daily modulation alone peaks the autocorrelation at lag 24") {
  const auto grid = gwtest::tiny_grid(2, 1);
  std::vector<LoadProfileParams> params(1);
  params[0].base_mw = 100.0;
  params[0].daily_amp = 0.2;
  params[0].weekly_amp = 0.0;
  params[0].seasonal_amp = 0.0;
  params[0].noise_sigma = 0.0;
  const auto loads = gen_loads(grid, 1, params);

  // Brute-force sample autocorrelation over lags 1..48.
  const auto& v = loads.values;
  const double mean = v.col(0).mean();
  double best = -2.0;
  int best_lag = 0;
  const std::int64_t n = loads.rows();
  for (int lag = 1; lag <= 48; ++lag) {
    double num = 0.0, den = 0.0;
    for (std::int64_t t = 0; t < n; ++t) {
      const double a = v(t, 0) - mean;
      den += a * a;
      if (t + lag < n) num += a * (v(t + lag, 0) - mean);
    }
    const double r = num / den;
    if (r > best) {
      best = r;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 24);
}

TEST_CASE("load generation is deterministic and column-order independent") {
  const auto grid = gwtest::tiny_grid(2, 3);
  std::vector<LoadProfileParams> params(3);
  for (auto& p : params) p.seed = 77;
  const auto a = gen_loads(grid, 1, params);
  const auto b = gen_loads(grid, 1, params);
  CHECK(a.values == b.values);
}

TEST_CASE("a lone dispatchable plant carries exactly load times one plus export") {
  // The grid model requires two plants; a zero-energy nuclear unit
  // contributes nothing, so the balance is forced through the gas plant.
  GridSpec grid;
  grid.name = "solo";
  grid.load_bus_ids = {"l1"};
  Plant gas;
  gas.id = "g";
  gas.kind = PlantKind::gas;
  gas.rated_power = 500.0;
  gas.annual_energy = 500.0 * 8736.0 * 0.5;
  gas.bus_id = "b1";
  Plant nuke;
  nuke.id = "n";
  nuke.kind = PlantKind::nuclear;
  nuke.rated_power = 100.0;
  nuke.annual_energy = 0.0;
  nuke.bus_id = "b2";
  grid.plants = {gas, nuke};

  const auto loads = gen_loads(grid, 1, flat_params(1, 200.0));
  DispatchParams dp;
  dp.export_fraction = 0.05;
  dp.export_sigma = 0.0;
  const auto result = dispatch_generation(grid, loads, dp);
  const auto gas_col = result.generation.column_index("g");
  const auto nuke_col = result.generation.column_index("n");
  for (std::int64_t t = 0; t < loads.rows(); ++t) {
    CHECK(result.generation.values(t, nuke_col) == 0.0);
    CHECK(result.generation.values(t, gas_col) == doctest::Approx(200.0 * 1.05).epsilon(1e-12));
  }
}

TEST_CASE("demand beyond fleet capacity raises an error naming the hour") {
  const auto grid = gwtest::tiny_grid(2, 1, 100.0);  // 200 MW of capacity
  SeriesFrame loads;
  loads.columns = grid.load_bus_ids;
  loads.values = Eigen::MatrixXd::Constant(kHoursPerYear, 1, 50.0);
  loads.values(1000, 0) = 5000.0;
  DispatchParams dp;
  try {
    dispatch_generation(grid, loads, dp);
    FAIL("expected infeasibility");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("hour 1000") != std::string::npos);
  }
}

TEST_CASE("annual energy shares track the plants' budgets") {
  GridSpec grid = gwtest::tiny_grid(2, 1, 400.0);
  // Total demand of one year at constant 300 MW: 300 * 8736 MWh, split 60/40.
  const double total = 300.0 * 8736.0;
  grid.plants[0].annual_energy = 0.6 * total;
  grid.plants[1].annual_energy = 0.4 * total;
  const auto loads = gen_loads(grid, 1, flat_params(1, 300.0));
  DispatchParams dp;
  dp.dispersion = 0.5;
  dp.jitter_rho = 0.9;
  const auto result = dispatch_generation(grid, loads, dp);

  const double e1 = result.generation.values.col(0).sum();
  const double e2 = result.generation.values.col(1).sum();
  const double share1 = e1 / (e1 + e2);
  CHECK(std::abs(share1 - 0.6) < 0.6 * 0.05);
  CHECK(std::abs((1.0 - share1) - 0.4) < 0.4 * 0.05);
}

TEST_CASE("every hour balances generation against load times one plus export") {
  const auto grid = gwtest::tiny_grid(3, 2, 300.0);
  std::vector<LoadProfileParams> params(2);
  for (auto& p : params) {
    p.base_mw = 150.0;
    p.daily_amp = 0.2;
    p.noise_sigma = 0.02;
  }
  const auto loads = gen_loads(grid, 1, params);
  DispatchParams dp;
  dp.export_fraction = 0.03;
  dp.export_sigma = 0.02;
  dp.dispersion = 0.6;
  const auto result = dispatch_generation(grid, loads, dp);
  REQUIRE(result.export_factor.size() == static_cast<std::size_t>(loads.rows()));
  for (std::int64_t t = 0; t < loads.rows(); ++t) {
    const double demand =
        loads.values.row(t).sum() * (1.0 + result.export_factor[static_cast<std::size_t>(t)]);
    const double produced = result.generation.values.row(t).sum();
    CHECK(std::abs(produced - demand) < 1e-6);
  }
}

TEST_CASE("generation respects box constraints and the full frame validates") {
  const auto grid = gwtest::tiny_grid(4, 2, 250.0);
  std::vector<LoadProfileParams> params(2);
  for (auto& p : params) {
    p.base_mw = 200.0;
    p.daily_amp = 0.25;
    p.seasonal_amp = 0.15;
    p.noise_sigma = 0.03;
  }
  const auto loads = gen_loads(grid, 2, params);
  DispatchParams dp;
  dp.dispersion = 0.8;
  const auto result = dispatch_generation(grid, loads, dp);
  const auto frame = combine_frames(grid, loads, result.generation);
  CHECK(validate_frame(frame, grid).ok());
  CHECK(frame.columns == grid.column_ids());
}

TEST_CASE("nuclear output is flat at its budgeted pace") {
  GridSpec grid = gwtest::tiny_grid(2, 1, 500.0);
  Plant nuke;
  nuke.id = "n1";
  nuke.kind = PlantKind::nuclear;
  nuke.rated_power = 200.0;
  nuke.annual_energy = 150.0 * 8736.0;  // paces at 150 MW flat
  nuke.bus_id = "bn";
  grid.plants.push_back(nuke);
  const auto loads = gen_loads(grid, 1, flat_params(1, 400.0));
  const auto result = dispatch_generation(grid, loads, DispatchParams{});
  const auto col = result.generation.column_index("n1");
  CHECK((result.generation.values.col(col).array() == 150.0).all());
}

TEST_CASE("dispatch is deterministic for identical inputs") {
  const auto grid = gwtest::tiny_grid(3, 1, 300.0);
  const auto loads = gen_loads(grid, 1, flat_params(1, 350.0));
  DispatchParams dp;
  dp.dispersion = 0.7;
  dp.export_sigma = 0.02;
  const auto a = dispatch_generation(grid, loads, dp);
  const auto b = dispatch_generation(grid, loads, dp);
  CHECK(a.generation.values == b.generation.values);
  CHECK(a.export_factor == b.export_factor);
}

TEST_CASE("parameter validation catches bad profiles and dispatch settings") {
  LoadProfileParams lp;
  lp.base_mw = -1.0;
  CHECK_THROWS_AS(lp.validate(), ConfigError);
  lp = LoadProfileParams{};
  lp.daily_amp = 0.5;
  lp.seasonal_amp = 0.5;
  CHECK_THROWS_AS(lp.validate(), ConfigError);  // amplitudes must leave loads positive

  const auto grid = gwtest::tiny_grid(2, 1);
  DispatchParams dp;
  dp.export_fraction = 0.5;
  CHECK_THROWS_AS(dp.validate(grid), ConfigError);
  dp = DispatchParams{};
  dp.jitter_rho = 1.0;
  CHECK_THROWS_AS(dp.validate(grid), ConfigError);
  dp = DispatchParams{};
  dp.merit_order.clear();
  CHECK_THROWS_AS(dp.validate(grid), ConfigError);
}

}  // TEST_SUITE
