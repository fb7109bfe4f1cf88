#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gridwatch {

/// Linear support vector classifier trained by seeded minibatch subgradient
/// descent (Pegasos schedule with tail-averaged iterates) on
///   min  lambda/2 ||w||^2 + (1/n) sum hinge(y_i (w.x_i + b)),  lambda = 1/(n C).
/// Expects standardized features. score > 0 is anomalous.
struct LinearSvc {
  Eigen::VectorXd w;
  double b = 0.0;
  double c = 1.0;

  struct FitOpts {
    double c = 300.0;
    int epochs = 200;
    int batch_size = 128;
  };

  static LinearSvc fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                       const FitOpts& opts, std::uint64_t seed);

  double score(const Eigen::VectorXd& x) const;
  int predict_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  /// Objective value at the current parameters; used by the training loop
  /// and exposed so tests can check descent against a numeric oracle.
  double objective(const Eigen::MatrixXd& x, const std::vector<int>& y) const;
};

}  // namespace gridwatch
