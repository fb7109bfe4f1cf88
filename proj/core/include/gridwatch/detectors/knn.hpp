#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gridwatch {

/// k-nearest-neighbour vote on Euclidean distance. Expects features already
/// standardized by the caller. Neighbour order breaks distance ties by the
/// lower training index; an even vote goes to the anomalous class.
struct KnnClassifier {
  int k = 1;
  Eigen::MatrixXd train_x;
  std::vector<int> train_y;

  static KnnClassifier fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int k);

  int predict_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

}  // namespace gridwatch
