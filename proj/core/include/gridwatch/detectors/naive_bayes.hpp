#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gridwatch {

/// Gaussian naive Bayes for binary labels {0, 1}. Per class and feature a
/// normal is fitted by maximum likelihood; prediction picks the larger log
/// posterior. Variances are floored at 1e-9 times the largest overall
/// feature variance so constant features cannot blow up the density.
struct GaussianNb {
  Eigen::Vector2d log_prior;
  Eigen::MatrixXd mean;  // 2 x d, row per class
  Eigen::MatrixXd var;   // 2 x d

  static GaussianNb fit(const Eigen::MatrixXd& x, const std::vector<int>& y);

  double log_joint(const Eigen::VectorXd& x, int cls) const;
  int predict_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

}  // namespace gridwatch
