#include "gridwatch/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

std::vector<std::int64_t> SplitPlan::cv_rows() const {
  std::vector<std::int64_t> rows;
  for (const auto& fold : folds) rows.insert(rows.end(), fold.begin(), fold.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::int64_t> SplitPlan::train_rows() const {
  std::vector<std::int64_t> rows = cv_rows();
  rows.insert(rows.end(), holdout_rows.begin(), holdout_rows.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

SplitPlan make_split(std::int64_t total_rows, std::uint64_t seed, int fold_count) {
  if (total_rows < 10) {
    throw ConfigError("make_split: need at least 10 rows, got " + std::to_string(total_rows));
  }
  if (fold_count < 2) {
    throw ConfigError("make_split: need at least 2 folds");
  }

  std::vector<std::int64_t> order(static_cast<std::size_t>(total_rows));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  const auto test_n =
      static_cast<std::int64_t>(std::llround(0.2 * static_cast<double>(total_rows)));
  const std::int64_t train_n = total_rows - test_n;
  const auto holdout_n =
      static_cast<std::int64_t>(std::llround(0.2 * static_cast<double>(train_n)));
  const std::int64_t cv_n = train_n - holdout_n;
  if (cv_n < fold_count) {
    throw ConfigError("make_split: " + std::to_string(cv_n) + " rows left for " +
                      std::to_string(fold_count) + " folds");
  }

  SplitPlan plan;
  plan.seed = seed;
  auto it = order.begin();
  plan.test_rows.assign(it, it + test_n);
  it += test_n;
  plan.holdout_rows.assign(it, it + holdout_n);
  it += holdout_n;

  const std::int64_t base = cv_n / fold_count;
  const std::int64_t extra = cv_n % fold_count;  // first `extra` folds get one more
  plan.folds.resize(static_cast<std::size_t>(fold_count));
  for (int f = 0; f < fold_count; ++f) {
    const std::int64_t size = base + (f < extra ? 1 : 0);
    plan.folds[static_cast<std::size_t>(f)].assign(it, it + size);
    it += size;
    std::sort(plan.folds[static_cast<std::size_t>(f)].begin(),
              plan.folds[static_cast<std::size_t>(f)].end());
  }
  std::sort(plan.test_rows.begin(), plan.test_rows.end());
  std::sort(plan.holdout_rows.begin(), plan.holdout_rows.end());
  return plan;
}

}  // namespace gridwatch
