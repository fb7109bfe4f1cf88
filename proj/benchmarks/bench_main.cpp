#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/Dense>

#include "gridwatch/datagen.hpp"
#include "gridwatch/detectors/decision_tree.hpp"
#include "gridwatch/detectors/knn.hpp"
#include "gridwatch/detectors/residual.hpp"
#include "gridwatch/features.hpp"
#include "gridwatch/grid.hpp"
#include "gridwatch/rng.hpp"
#include "gridwatch/split.hpp"

namespace {

using namespace gridwatch;

GridSpec bench_grid() {
  GridSpec grid;
  grid.name = "bench";
  grid.load_bus_ids = {"L1", "L2", "L3"};
  for (int i = 0; i < 6; ++i) {
    Plant p;
    p.id = "P" + std::to_string(i);
    p.kind = i < 3 ? PlantKind::gas : PlantKind::coal;
    p.rated_power = 400.0;
    p.annual_energy = 1.2e6;
    p.bus_id = "B" + std::to_string(i);
    grid.plants.push_back(p);
  }
  return grid;
}

SeriesFrame bench_frame(const GridSpec& grid, std::int64_t rows) {
  SeriesFrame frame;
  frame.columns = grid.column_ids();
  frame.values.resize(rows, static_cast<Eigen::Index>(frame.columns.size()));
  Rng rng(7);
  for (Eigen::Index c = 0; c < frame.values.cols(); ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      frame.values(r, c) = 200.0 + 100.0 * rng.uniform();
    }
  }
  return frame;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

void BM_feature_build_full_context(benchmark::State& state) {
  const auto grid = bench_grid();
  const auto frame = bench_frame(grid, 8736);
  std::vector<std::uint8_t> labels(8736, 0);
  for (std::size_t i = 0; i < labels.size(); i += 10) labels[i] = 1;
  FeatureConfig fc;
  fc.context_scope = ContextScope::all_injections;
  fc.history_scope = HistoryScope::full_context;
  fc.history_len = 24;
  for (auto _ : state) {
    auto data = build_dataset(frame, labels, "P0", fc, grid);
    benchmark::DoNotOptimize(data.x.data());
  }
}
BENCHMARK(BM_feature_build_full_context)->Unit(benchmark::kMillisecond);

void BM_knn_predict(benchmark::State& state) {
  const auto train_x = random_matrix(2000, 30, 1);
  std::vector<int> train_y(2000);
  for (std::size_t i = 0; i < train_y.size(); ++i) train_y[i] = i % 10 == 0 ? 1 : 0;
  const auto model = KnnClassifier::fit(train_x, train_y, static_cast<int>(state.range(0)));
  const auto test_x = random_matrix(100, 30, 2);
  for (auto _ : state) {
    auto pred = model.predict(test_x);
    benchmark::DoNotOptimize(pred.data());
  }
}
BENCHMARK(BM_knn_predict)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_tree_fit(benchmark::State& state) {
  const auto x = random_matrix(2000, 30, 3);
  Eigen::VectorXd y(2000);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = (x(i, 0) + x(i, 3) > 0.5) ? 1.0 : 0.0;
  DecisionTree::FitOpts opts;
  opts.max_depth = 8;
  for (auto _ : state) {
    auto tree = DecisionTree::fit(x, y, opts);
    benchmark::DoNotOptimize(tree.nodes.data());
  }
}
BENCHMARK(BM_tree_fit)->Unit(benchmark::kMillisecond);

void BM_threshold_fit(benchmark::State& state) {
  const Eigen::Index n = 5000;
  Rng rng(11);
  Eigen::VectorXd predicted(n), reported(n);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    predicted(i) = 200.0 + 30.0 * rng.normal();
    const bool attacked = rng.uniform() < 0.1;
    labels[static_cast<std::size_t>(i)] = attacked ? 1 : 0;
    reported(i) = attacked ? (predicted(i) < 200.0 ? 400.0 : 0.0)
                           : predicted(i) + 5.0 * rng.normal();
  }
  for (auto _ : state) {
    auto fit = fit_threshold(predicted, reported, labels, 400.0);
    benchmark::DoNotOptimize(fit.threshold);
  }
}
BENCHMARK(BM_threshold_fit)->Unit(benchmark::kMillisecond);

void BM_dispatch_year(benchmark::State& state) {
  const auto grid = bench_grid();
  std::vector<LoadProfileParams> params(grid.load_count());
  for (auto& p : params) p.base_mw = 500.0;
  const auto loads = gen_loads(grid, 1, params);
  DispatchParams dp;
  for (auto _ : state) {
    auto result = dispatch_generation(grid, loads, dp);
    benchmark::DoNotOptimize(result.generation.values.data());
  }
}
BENCHMARK(BM_dispatch_year)->Unit(benchmark::kMillisecond);

void BM_split(benchmark::State& state) {
  for (auto _ : state) {
    auto plan = make_split(174720, 9);
    benchmark::DoNotOptimize(plan.test_rows.data());
  }
}
BENCHMARK(BM_split)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
