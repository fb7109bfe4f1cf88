#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridwatch/attacks.hpp"
#include "gridwatch/errors.hpp"
#include "gridwatch/robustness.hpp"
#include "test_support.hpp"

using namespace gridwatch;

namespace {

struct RobFixture {
  GridSpec grid;
  LabeledDataset ds;
  FeatureConfig cfg;
  ClassifierModel model;
  std::vector<std::int64_t> test_rows;
  std::vector<std::uint8_t> test_labels;
  std::vector<std::string> ctx{"p2", "p3", "p4"};
};

RobFixture classifier_fixture() {
  RobFixture f;
  f.grid = gwtest::tiny_grid(4, 2);
  const SeriesFrame frame = gwtest::random_frame(f.grid, 400, 1234, 10, 90);
  f.ds = inject_attacks(frame, f.grid, "p1", 0.25, 99);

  f.cfg.context_scope = ContextScope::generators_only;
  f.cfg.history_scope = HistoryScope::target_only;
  f.cfg.history_len = 2;
  f.cfg.task = TaskKind::classification;

  std::vector<std::int64_t> train_rows;
  for (std::int64_t r = 0; r < 100; ++r) train_rows.push_back(r);
  for (std::int64_t r = 100; r < 400; ++r) f.test_rows.push_back(r);
  for (const auto r : f.test_rows) {
    f.test_labels.push_back(f.ds.labels[static_cast<std::size_t>(r)]);
  }

  const DesignMatrix dm =
      build_dataset_rows(f.ds.reported, f.ds.labels, "p1", f.cfg, f.grid, train_rows);
  std::vector<int> y(static_cast<std::size_t>(dm.y.size()));
  for (Eigen::Index i = 0; i < dm.y.size(); ++i) {
    y[static_cast<std::size_t>(i)] = dm.y(i) != 0.0 ? 1 : 0;
  }
  f.model = train_classifier(Algo::nbc, dm.x, y, {}, 5);
  return f;
}

double combo_f2(const RobFixture& f, const std::vector<std::string>& combo,
                const RobustnessOptions& opt) {
  const LabeledDataset corrupted = apply_concurrent(f.ds, f.grid, combo, opt.policy, opt.seed);
  const DesignMatrix dm =
      build_dataset_rows(corrupted.reported, corrupted.labels, "p1", f.cfg, f.grid, f.test_rows);
  const auto f2 = f2_score(confusion_from(f.model.predict(dm.x), f.test_labels));
  REQUIRE(f2.has_value());
  return *f2;
}

/// Regressor that ignores its inputs and always answers `value`.
RegressorModel constant_regressor(double value, Eigen::Index width) {
  Mlp net;
  net.classifier = false;
  net.w.push_back(Eigen::MatrixXd::Zero(1, width));
  net.b.push_back(Eigen::VectorXd::Zero(1));
  net.w.push_back(Eigen::MatrixXd::Zero(1, 1));
  net.b.push_back(Eigen::VectorXd::Constant(1, value));
  RegressorModel model;
  model.algo = Algo::mlpr;
  model.hyper.hidden = std::vector<int>{1};
  model.impl = std::move(net);
  return model;
}

}  // namespace

TEST_CASE("a zero-corruption scan reproduces the plain evaluation") {
  const auto f = classifier_fixture();
  REQUIRE(std::count(f.test_labels.begin(), f.test_labels.end(), 1) > 0);

  DetectorRef ref;
  ref.classifier = &f.model;
  RobustnessOptions opt;
  opt.m_max = 0;

  const auto report = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt);
  CHECK(report.levels.empty());
  CHECK_FALSE(report.baseline_error_rate.has_value());
  CHECK(report.baseline.target == "p1");
  CHECK(report.baseline.feature_key == f.cfg.key());

  const DesignMatrix dm =
      build_dataset_rows(f.ds.reported, f.ds.labels, "p1", f.cfg, f.grid, f.test_rows);
  auto want = evaluate_classifier(f.model, dm.x, f.test_labels);
  want.target = "p1";
  want.feature_key = f.cfg.key();
  CHECK(eval_result_to_json(report.baseline) == eval_result_to_json(want));
}

TEST_CASE("level one scores every context plant alone, worst first to suffer") {
  const auto f = classifier_fixture();
  DetectorRef ref;
  ref.classifier = &f.model;
  RobustnessOptions opt;
  opt.m_max = 2;
  opt.seed = 31;

  const auto report = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt);
  REQUIRE(report.levels.size() == 2);

  const auto& level1 = report.levels[0];
  CHECK(level1.m == 1);
  CHECK(level1.combination_count == 3);

  std::vector<double> f2s;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < f.ctx.size(); ++i) {
    f2s.push_back(combo_f2(f, {f.ctx[i]}, opt));
    if (f2s[i] < f2s[worst]) worst = i;
  }
  const SummaryStats want = summarize(f2s);
  CHECK(level1.f2_stats.min == want.min);
  CHECK(level1.f2_stats.q1 == want.q1);
  CHECK(level1.f2_stats.median == want.median);
  CHECK(level1.f2_stats.q3 == want.q3);
  CHECK(level1.f2_stats.max == want.max);
  CHECK(level1.worst.f2 == f2s[worst]);
  REQUIRE(level1.worst.combo.size() == 1);
  CHECK(level1.worst.combo[0] == f.ctx[worst]);
  CHECK_FALSE(level1.worst.error_rate.has_value());

  const auto& level2 = report.levels[1];
  CHECK(level2.m == 2);
  CHECK(level2.combination_count == 3);  // C(3, 2)
  CHECK(level2.worst.combo.size() == 2);
  CHECK(level2.worst.f2 == combo_f2(f, level2.worst.combo, opt));
}

TEST_CASE("greedy mode grows the worst combination one plant at a time") {
  const auto f = classifier_fixture();
  DetectorRef ref;
  ref.classifier = &f.model;
  RobustnessOptions opt;
  opt.seed = 31;
  opt.mode = ScanMode::worst_case_greedy;
  opt.m_max = 5;  // more than the three context plants on offer

  const auto report = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt);
  REQUIRE(report.levels.size() == 3);  // runs out of plants after that
  CHECK(report.levels[0].combination_count == 3);
  CHECK(report.levels[1].combination_count == 2);
  CHECK(report.levels[2].combination_count == 1);

  // Each level's worst combo extends the previous one.
  for (std::size_t lvl = 1; lvl < report.levels.size(); ++lvl) {
    const auto& prev = report.levels[lvl - 1].worst.combo;
    const auto& cur = report.levels[lvl].worst.combo;
    REQUIRE(cur.size() == prev.size() + 1);
    for (const auto& id : prev) {
      CHECK(std::find(cur.begin(), cur.end(), id) != cur.end());
    }
  }

  // Greedy explores a subset of the exhaustive combos, so its worst case
  // can only be milder.
  RobustnessOptions ex = opt;
  ex.mode = ScanMode::exhaustive;
  ex.m_max = 2;
  const auto full = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, ex);
  CHECK(report.levels[1].worst.f2 >= full.levels[1].worst.f2);

  CHECK(scan_mode_from_string(to_string(ScanMode::worst_case_greedy)) ==
        ScanMode::worst_case_greedy);
  CHECK(scan_mode_from_string("exhaustive") == ScanMode::exhaustive);
  CHECK_THROWS_AS(scan_mode_from_string("depth_first"), ConfigError);
}

TEST_CASE("the exhaustive combination budget is enforced per level") {
  const auto f = classifier_fixture();
  DetectorRef ref;
  ref.classifier = &f.model;
  RobustnessOptions opt;
  opt.m_max = 1;
  opt.max_combinations = 2;  // C(3, 1) = 3 will not fit

  CHECK_THROWS_WITH_AS(robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt),
                       "robustness_scan: C(3, 1) exceeds the combination budget of 2; "
                       "use worst_case_greedy or raise the budget",
                       EvalError);

  opt.mode = ScanMode::worst_case_greedy;  // greedy ignores the budget
  CHECK_NOTHROW(robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt));
}

TEST_CASE("residual detectors add a prediction error rate to every level") {
  const auto base = classifier_fixture();
  FeatureConfig cfg = base.cfg;
  cfg.task = TaskKind::regression;

  ResidualDetector det;
  det.regressor = constant_regressor(50.0, vector_size(cfg, base.grid));
  det.threshold.threshold = 30.0;
  det.threshold.rated_power = 100.0;
  DetectorRef ref;
  ref.residual = &det;

  RobustnessOptions opt;
  opt.m_max = 1;
  opt.error_band_mw = 20.0;

  const auto report =
      robustness_scan(ref, base.ds, base.grid, cfg, base.test_rows, base.ctx, opt);

  // The band oracle: the regressor always answers 50, so the rate is the
  // share of test rows whose true output leaves [30, 70].
  const auto col = base.ds.truth.column_index("p1");
  std::int64_t exceeding = 0;
  for (const auto r : base.test_rows) {
    const double truth = base.ds.truth.values(r, col);
    if (std::abs(50.0 - truth) > 20.0) ++exceeding;
  }
  const double want_rate =
      static_cast<double>(exceeding) / static_cast<double>(base.test_rows.size());
  REQUIRE(report.baseline_error_rate.has_value());
  CHECK(*report.baseline_error_rate == want_rate);

  // An input-blind regressor cannot react to context corruption: every
  // combo at level one repeats the baseline numbers.
  REQUIRE(report.levels.size() == 1);
  const auto& level = report.levels[0];
  REQUIRE(level.error_rate_stats.has_value());
  CHECK(level.error_rate_stats->min == want_rate);
  CHECK(level.error_rate_stats->max == want_rate);
  REQUIRE(level.worst.error_rate.has_value());
  CHECK(*level.worst.error_rate == want_rate);
  REQUIRE(report.baseline.f2.has_value());
  CHECK(level.f2_stats.min == *report.baseline.f2);
  CHECK(level.f2_stats.max == *report.baseline.f2);
  CHECK(level.worst.f2 == *report.baseline.f2);
}

TEST_CASE("scan results are identical across reruns and worker counts") {
  const auto f = classifier_fixture();
  DetectorRef ref;
  ref.classifier = &f.model;
  RobustnessOptions opt;
  opt.m_max = 2;
  opt.seed = 17;
  opt.workers = 1;

  const auto a = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt);
  const auto b = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt);
  opt.workers = 3;
  const auto c = robustness_scan(ref, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt);
  CHECK(robustness_report_to_json(a) == robustness_report_to_json(b));
  CHECK(robustness_report_to_json(a) == robustness_report_to_json(c));

  const auto j = nlohmann::json::parse(robustness_report_to_json(a));
  CHECK(j.at("baseline_error_rate").is_null());
  CHECK(j.at("levels").size() == 2);
  CHECK(j.at("levels")[0].at("combinations") == 3);
}

TEST_CASE("the scan rejects malformed requests") {
  const auto f = classifier_fixture();
  DetectorRef cls;
  cls.classifier = &f.model;
  RobustnessOptions opt;

  DetectorRef neither;
  CHECK_THROWS_AS(robustness_scan(neither, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt),
                  EvalError);
  ResidualDetector det;
  det.regressor = constant_regressor(50.0, 5);
  det.threshold.rated_power = 100.0;
  DetectorRef both;
  both.classifier = &f.model;
  both.residual = &det;
  CHECK_THROWS_AS(robustness_scan(both, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, opt),
                  EvalError);

  RobustnessOptions bad = opt;
  bad.m_max = -1;
  CHECK_THROWS_AS(robustness_scan(cls, f.ds, f.grid, f.cfg, f.test_rows, f.ctx, bad),
                  ConfigError);

  CHECK_THROWS_AS(robustness_scan(cls, f.ds, f.grid, f.cfg, {}, f.ctx, opt), EvalError);

  const std::vector<std::string> with_target{"p2", "p1"};
  CHECK_THROWS_AS(robustness_scan(cls, f.ds, f.grid, f.cfg, f.test_rows, with_target, opt),
                  ConfigError);
}
