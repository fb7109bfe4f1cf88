#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gridwatch/errors.hpp"
#include "gridwatch/metrics.hpp"
#include "gridwatch/rng.hpp"

using namespace gridwatch;

namespace {

/// Independent F2 oracle: F-beta with beta = 2 in its textbook form,
/// (1 + b^2) * P * R / (b^2 * P + R), computed in long double.
std::optional<long double> fbeta2_oracle(const ConfusionCounts& c) {
  const long double tp = static_cast<long double>(c.tp);
  const long double fp = static_cast<long double>(c.fp);
  const long double fn = static_cast<long double>(c.fn);
  if (tp + fp + fn == 0.0L) return std::nullopt;
  if (tp == 0.0L) return 0.0L;  // positives exist somewhere but none were hit
  const long double p = tp / (tp + fp);
  const long double r = tp / (tp + fn);
  return 5.0L * p * r / (4.0L * p + r);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("confusion counting is cellwise") {
  const std::vector<int> pred = {1, 1, 0, 0, 1, 0};
  const std::vector<std::uint8_t> truth = {1, 0, 1, 0, 1, 0};
  const auto c = confusion_from(pred, truth);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 2);
  CHECK(c.total() == 6);
  CHECK_THROWS_AS(confusion_from({1}, {1, 0}), EvalError);
}

TEST_CASE("f2 hits the anchor values") {
  CHECK(f2_score({10, 0, 0, 5}) == 1.0);              // perfect detector
  CHECK(f2_score({0, 3, 7, 0}) == 0.0);               // never right
  const auto v = f2_score({10, 5, 2, 0});             // 50/63 by the closed form
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(50.0 / 63.0).epsilon(1e-15));
  CHECK(!f2_score({0, 0, 0, 25}).has_value());        // no positives anywhere
}

TEST_CASE("f2 equals the f-beta oracle on random confusion matrices") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    ConfusionCounts c;
    c.tp = static_cast<std::int64_t>(rng.below(50));
    c.fp = static_cast<std::int64_t>(rng.below(50));
    c.fn = static_cast<std::int64_t>(rng.below(50));
    c.tn = static_cast<std::int64_t>(rng.below(50));
    const auto got = f2_score(c);
    const auto want = fbeta2_oracle(c);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(*got == doctest::Approx(static_cast<double>(*want)).epsilon(1e-12));
    }
  }
}

TEST_CASE("f2 weights missed anomalies heavier than false alarms") {
  // Starting from a mixed matrix, trading one FN for one FP must not hurt.
  const ConfusionCounts base{20, 10, 10, 100};
  const auto f_base = f2_score(base);
  const auto f_fewer_misses = f2_score({20, 11, 9, 100});
  REQUIRE((f_base && f_fewer_misses));
  CHECK(*f_fewer_misses > *f_base);

  // And F2 rises monotonically in TP when totals are held fixed.
  double prev = -1.0;
  for (std::int64_t tp = 0; tp <= 30; ++tp) {
    const auto f = f2_score({tp, 5, 30 - tp, 10});
    REQUIRE(f.has_value());
    CHECK(*f >= prev);
    prev = *f;
  }
}

TEST_CASE("precision and recall go empty instead of dividing by zero") {
  const auto both = prf_metrics({8, 2, 4, 6});
  CHECK(*both.precision == doctest::Approx(0.8));
  CHECK(*both.recall == doctest::Approx(8.0 / 12.0));

  const auto no_preds = prf_metrics({0, 0, 5, 5});
  CHECK(!no_preds.precision.has_value());
  CHECK(*no_preds.recall == 0.0);

  const auto no_truth = prf_metrics({0, 5, 0, 5});
  CHECK(*no_truth.precision == 0.0);
  CHECK(!no_truth.recall.has_value());
}

TEST_CASE("r2 matches hand-computed anchors") {
  CHECK(*r2_score({1, 2, 3, 4}, {1, 2, 3, 4}) == 1.0);
  // Predicting the mean scores zero.
  CHECK(*r2_score({1, 2, 3}, {2, 2, 2}) == doctest::Approx(0.0));
  // One step off on one of two symmetric points: 1 - 1/2 = 0.5.
  CHECK(*r2_score({0, 2}, {0, 1}) == doctest::Approx(0.5));
  // Worse than the mean goes negative.
  CHECK(*r2_score({1, 2, 3}, {3, 2, 1}) < 0.0);
  // Constant truth has no variance to explain.
  CHECK(!r2_score({5, 5, 5}, {1, 2, 3}).has_value());
  CHECK_THROWS_AS(r2_score({1, 2}, {1}), EvalError);
  CHECK_THROWS_AS(r2_score({1}, {1}), EvalError);
}

TEST_CASE("r2 agrees with the explicit residual formula on random data") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> y(40), p(40);
    for (int i = 0; i < 40; ++i) {
      y[i] = 10.0 * rng.normal();
      p[i] = y[i] + rng.normal();
    }
    double mean = 0;
    for (double v : y) mean += v;
    mean /= 40.0;
    double ss_res = 0, ss_tot = 0;
    for (int i = 0; i < 40; ++i) {
      ss_res += (y[i] - p[i]) * (y[i] - p[i]);
      ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    CHECK(*r2_score(y, p) == doctest::Approx(1.0 - ss_res / ss_tot).epsilon(1e-12));
  }
}

TEST_CASE("rmse is the root mean squared residual") {
  CHECK(rmse({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(rmse({0, 0}, {3, 4}) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(rmse({1}, {1, 2}), EvalError);
}

TEST_CASE("the five-number summary interpolates quartiles linearly") {
  // Odd count: quartile positions fall between order statistics.
  const auto s = summarize({1, 2, 3, 4, 5});
  CHECK(s.min == 1.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.median == 3.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.max == 5.0);

  // Four points: q1 at position 0.75 between the first two values.
  const auto t = summarize({10, 20, 30, 40});
  CHECK(t.q1 == doctest::Approx(17.5));
  CHECK(t.median == doctest::Approx(25.0));
  CHECK(t.q3 == doctest::Approx(32.5));

  // Input order must not matter.
  const auto u = summarize({40, 10, 30, 20});
  CHECK(u.q1 == doctest::Approx(17.5));

  const auto single = summarize({7.0});
  CHECK(single.min == 7.0);
  CHECK(single.q1 == 7.0);
  CHECK(single.median == 7.0);
  CHECK(single.max == 7.0);

  CHECK_THROWS_AS(summarize({}), EvalError);
}

TEST_CASE("summary quartiles match a brute-force interpolation oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<std::size_t>(2 + rng.below(60));
    std::vector<double> values(n);
    for (auto& v : values) v = 100.0 * rng.uniform();
    const auto s = summarize(values);

    std::sort(values.begin(), values.end());
    const auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(n - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = static_cast<std::size_t>(std::ceil(pos));
      return values[lo] + (pos - std::floor(pos)) * (values[hi] - values[lo]);
    };
    CHECK(s.min == values.front());
    CHECK(s.q1 == doctest::Approx(quantile(0.25)).epsilon(1e-12));
    CHECK(s.median == doctest::Approx(quantile(0.5)).epsilon(1e-12));
    CHECK(s.q3 == doctest::Approx(quantile(0.75)).epsilon(1e-12));
    CHECK(s.max == values.back());
  }
}

}  // TEST_SUITE
