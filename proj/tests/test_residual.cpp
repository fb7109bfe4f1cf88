#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detectors/residual.hpp"
#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"
#include "test_support.hpp"

using namespace gridwatch;

namespace {

struct ScanResult {
  double threshold = 0.0;
  double f2 = -1.0;
};

/// Brute-force reference: score every midpoint between adjacent distinct
/// absolute residuals by recounting the confusion cells from scratch.
ScanResult scan_oracle(const Eigen::VectorXd& predicted, const Eigen::VectorXd& reported,
                       const std::vector<std::uint8_t>& labels, double rated) {
  const auto n = predicted.size();
  std::vector<double> residuals(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    residuals[static_cast<std::size_t>(i)] =
        std::abs(reported(i) - std::clamp(predicted(i), 0.0, rated));
  }
  std::vector<double> distinct = residuals;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  ScanResult best;
  for (std::size_t j = 0; j + 1 < distinct.size(); ++j) {
    const double tau = distinct[j] + (distinct[j + 1] - distinct[j]) / 2.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      const bool flagged = residuals[i] > tau;
      if (flagged && labels[i]) ++tp;
      if (flagged && !labels[i]) ++fp;
      if (!flagged && labels[i]) ++fn;
    }
    const std::int64_t denom = 5 * tp + 4 * fn + fp;
    const double score =
        denom == 0 ? 0.0 : 5.0 * static_cast<double>(tp) / static_cast<double>(denom);
    if (score >= best.f2) {
      best.f2 = score;
      best.threshold = tau;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("threshold lands between the clean and attacked residual clusters") {
  // Clean rows miss by 1 and 2 MW, attacked rows by 100 and 120 MW.
  Eigen::VectorXd predicted(4);
  predicted << 50, 50, 50, 50;
  Eigen::VectorXd reported(4);
  reported << 51, 48, 150, 170;
  const std::vector<std::uint8_t> labels{0, 0, 1, 1};

  const auto fit = fit_threshold(predicted, reported, labels, 500.0);
  CHECK(fit.threshold == 51.0);  // midpoint of 2 and 100
  CHECK(fit.holdout_f2 == 1.0);
  CHECK(fit.separating);
  CHECK(fit.rated_power == 500.0);

  CHECK(detect_residual(fit, 50.0, 51.0) == 0);
  CHECK(detect_residual(fit, 50.0, 150.0) == 1);
}

TEST_CASE("ties between equally good cuts resolve toward the larger threshold") {
  // Residuals 5, 10, 20, 30 with only the smallest attacked: every candidate
  // cut (7.5, 15, 25) scores F2 = 0, so the tie rule must hand back the
  // largest one.
  Eigen::VectorXd predicted = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd reported(4);
  reported << 5, 10, 20, 30;
  const std::vector<std::uint8_t> labels{1, 0, 0, 0};

  const auto fit = fit_threshold(predicted, reported, labels, 500.0);
  CHECK(fit.threshold == 25.0);
  CHECK(fit.holdout_f2 == 0.0);

  // A hand-checked non-trivial optimum: residuals 1,2,3,101,102,103 with
  // rows 2 and 102 attacked.  Cutting above 1 flags five rows (tp=2 fp=3,
  // F2 = 10/13), which beats every higher cut.
  Eigen::VectorXd rep2(6);
  rep2 << 1, 2, 3, 101, 102, 103;
  const std::vector<std::uint8_t> lab2{0, 1, 0, 0, 1, 0};
  const auto fit2 = fit_threshold(Eigen::VectorXd::Zero(6), rep2, lab2, 500.0);
  CHECK(fit2.threshold == 1.5);
  CHECK(fit2.holdout_f2 == 10.0 / 13.0);
}

TEST_CASE("scaling reported and predicted by two doubles the threshold") {
  Eigen::VectorXd predicted(6);
  predicted << 10, 20, 30, 40, 50, 60;
  Eigen::VectorXd reported(6);
  reported << 11, 19, 33, 90, 95, 140;
  const std::vector<std::uint8_t> labels{0, 0, 0, 1, 1, 1};

  const auto base = fit_threshold(predicted, reported, labels, 1000.0);
  const auto scaled = fit_threshold(2.0 * predicted, 2.0 * reported, labels, 2000.0);
  CHECK(scaled.threshold == 2.0 * base.threshold);
  CHECK(scaled.holdout_f2 == base.holdout_f2);
}

TEST_CASE("fifty random holdouts match the brute-force midpoint scan exactly") {
  Rng rng(20260815);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(39));
    const double rated = 100.0;
    Eigen::VectorXd predicted(n);
    Eigen::VectorXd reported(n);
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 0);
    bool any_pos = false;
    for (int i = 0; i < n; ++i) {
      predicted(i) = rng.uniform() * rated;
      // Every third trial quantises reports to multiples of five so that
      // duplicate residuals exercise the distinct-value grouping.
      if (trial % 3 == 0) {
        predicted(i) = 0.0;
        reported(i) = 5.0 * static_cast<double>(rng.below(12));
      } else {
        reported(i) = rng.uniform() * rated;
      }
      labels[static_cast<std::size_t>(i)] = rng.uniform() < 0.4 ? 1 : 0;
      any_pos = any_pos || labels[static_cast<std::size_t>(i)];
    }
    if (!any_pos) labels[0] = 1;

    // Skip the rare all-identical-residual draw; that path has its own test.
    Eigen::VectorXd residuals =
        (reported - predicted.cwiseMax(0.0).cwiseMin(rated)).cwiseAbs();
    if (residuals.maxCoeff() == residuals.minCoeff()) continue;

    const auto fit = fit_threshold(predicted, reported, labels, rated);
    const auto want = scan_oracle(predicted, reported, labels, rated);
    CHECK(fit.threshold == want.threshold);
    CHECK(fit.holdout_f2 == want.f2);
    CHECK(fit.separating);
  }
}

TEST_CASE("identical residuals everywhere cannot separate") {
  Eigen::VectorXd predicted(4);
  predicted << 10, 20, 30, 40;
  Eigen::VectorXd reported(4);
  reported << 17, 27, 37, 47;
  const std::vector<std::uint8_t> labels{0, 1, 0, 1};

  const auto fit = fit_threshold(predicted, reported, labels, 100.0);
  CHECK_FALSE(fit.separating);
  CHECK(fit.threshold == 7.0);
  CHECK(fit.holdout_f2 == 0.0);

  // All-zero residuals floor the threshold at a tiny positive value.
  const auto zero = fit_threshold(predicted, predicted, labels, 100.0);
  CHECK_FALSE(zero.separating);
  CHECK(zero.threshold == 1e-12);
}

TEST_CASE("detection fires strictly above the threshold") {
  ResidualThreshold fit;
  fit.threshold = 51.0;
  fit.rated_power = 200.0;

  CHECK(detect_residual(fit, 0.0, 51.0) == 0);    // residual == threshold
  CHECK(detect_residual(fit, 0.0, 51.0 + 1e-9) == 1);
  CHECK(detect_residual(fit, 0.0, 50.999999) == 0);
}

TEST_CASE("predictions clip to the feasible band before the residual") {
  ResidualThreshold fit;
  fit.threshold = 10.0;
  fit.rated_power = 100.0;

  CHECK(clip_prediction(150.0, 100.0) == 100.0);
  CHECK(clip_prediction(-50.0, 100.0) == 0.0);
  CHECK(clip_prediction(60.0, 100.0) == 60.0);

  // A wild overshoot is forgiven when the report sits at the rail.
  CHECK(detect_residual(fit, 1e6, 100.0) == 0);
  CHECK(detect_residual(fit, -1e6, 0.0) == 0);
  CHECK(detect_residual(fit, -1e6, 11.0) == 1);

  // And fitting clips too: a prediction of 150 at rated 100 against a report
  // of 100 contributes residual 0, not 50.
  Eigen::VectorXd predicted(3);
  predicted << 150, 50, 50;
  Eigen::VectorXd reported(3);
  reported << 100, 50, 90;
  const std::vector<std::uint8_t> labels{0, 0, 1};
  const auto fitted = fit_threshold(predicted, reported, labels, 100.0);
  // Residuals 0, 0, 40: the only candidate is 20 and it separates cleanly.
  CHECK(fitted.threshold == 20.0);
  CHECK(fitted.holdout_f2 == 1.0);
}

TEST_CASE("batch detection agrees with the scalar loop") {
  Rng rng(77);
  ResidualThreshold fit;
  fit.threshold = 12.5;
  fit.rated_power = 90.0;

  Eigen::VectorXd predicted(64);
  Eigen::VectorXd reported(64);
  for (int i = 0; i < 64; ++i) {
    predicted(i) = rng.uniform() * 120.0 - 10.0;
    reported(i) = rng.uniform() * 90.0;
  }
  const auto batch = detect_residual_batch(fit, predicted, reported);
  REQUIRE(batch.size() == 64);
  for (int i = 0; i < 64; ++i) {
    CHECK(batch[static_cast<std::size_t>(i)] == detect_residual(fit, predicted(i), reported(i)));
  }

  Eigen::VectorXd shorter = predicted.head(10);
  CHECK_THROWS_AS(detect_residual_batch(fit, shorter, reported), EvalError);
}

TEST_CASE("threshold fitting rejects unusable holdouts") {
  Eigen::VectorXd predicted(4);
  predicted << 1, 2, 3, 4;
  Eigen::VectorXd reported(4);
  reported << 2, 3, 4, 5;

  CHECK_THROWS_AS(fit_threshold(predicted, reported, {0, 0, 0, 0}, 100.0), TrainError);
  CHECK_THROWS_AS(fit_threshold(predicted, reported, {0, 1}, 100.0), TrainError);
  CHECK_THROWS_AS(fit_threshold(predicted.head(1), reported.head(1), {1}, 100.0), TrainError);
  CHECK_THROWS_AS(fit_threshold(predicted, reported, {0, 1, 0, 1}, 0.0), TrainError);
  CHECK_THROWS_AS(fit_threshold(predicted, reported, {0, 1, 0, 1}, -5.0), TrainError);
}
