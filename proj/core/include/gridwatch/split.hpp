#pragma once

#include <cstdint>
#include <vector>

namespace gridwatch {

/// Seeded, disjoint partition of row indices 0..T-1:
///   test         round(0.2 T) rows, untouched until final evaluation
///   holdout      round(0.2 (T - |test|)) rows, threshold fitting only
///   folds        the remaining rows in `fold_count` groups balanced to +-1
/// Supervised training uses holdout + folds; unsupervised regressor training
/// uses the folds alone.
struct SplitPlan {
  std::vector<std::int64_t> test_rows;
  std::vector<std::int64_t> holdout_rows;
  std::vector<std::vector<std::int64_t>> folds;
  std::uint64_t seed = 0;

  std::vector<std::int64_t> cv_rows() const;     // union of folds, sorted
  std::vector<std::int64_t> train_rows() const;  // cv + holdout, sorted
};

SplitPlan make_split(std::int64_t total_rows, std::uint64_t seed, int fold_count = 5);

}  // namespace gridwatch
