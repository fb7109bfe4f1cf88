#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detectors/decision_tree.hpp"

namespace gridwatch {

/// Gradient boosting for binary labels with logistic loss: depth-3 mse trees
/// on the pseudo-residuals, Newton leaf values, shrinkage 0.1, starting from
/// the empirical log odds. Training logistic loss is recorded per stage.
struct GradientBoosting {
  double f0 = 0.0;
  double shrinkage = 0.1;
  std::vector<DecisionTree> stages;
  std::vector<double> train_loss;  // after each stage; never increases

  struct FitOpts {
    int stage_count = 100;
    int max_depth = 3;
    double shrinkage = 0.1;
  };

  static GradientBoosting fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                              const FitOpts& opts);

  double raw_score(const Eigen::VectorXd& x) const;  // log-odds
  double probability(const Eigen::VectorXd& x) const;
  int predict_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

}  // namespace gridwatch
