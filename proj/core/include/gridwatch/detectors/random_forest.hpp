#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detectors/decision_tree.hpp"

namespace gridwatch {

/// Bagged gini trees: each tree sees a bootstrap of the rows and sqrt(d)
/// features per node. Prediction is a majority vote over per-tree classes,
/// with an even vote counted as anomalous.
struct RandomForest {
  std::vector<DecisionTree> trees;

  struct FitOpts {
    int tree_count = 100;
    int max_depth = 64;
    int min_samples_leaf = 1;
  };

  static RandomForest fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const FitOpts& opts, std::uint64_t seed);

  int predict_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  /// Fraction of trees voting anomalous (the vote the prediction thresholds).
  double vote_fraction(const Eigen::VectorXd& x) const;
};

}  // namespace gridwatch
