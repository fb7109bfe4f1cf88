#include "gridwatch/detectors/knn.hpp"

#include <algorithm>
#include <string>

#include "gridwatch/errors.hpp"

namespace gridwatch {

KnnClassifier KnnClassifier::fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int k) {
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) {
    throw TrainError("knn: bad training shape");
  }
  if (k < 1 || k > x.rows()) {
    throw TrainError("knn: k = " + std::to_string(k) + " outside [1, " +
                     std::to_string(x.rows()) + "]");
  }
  for (const int label : y) {
    if (label != 0 && label != 1) {
      throw TrainError("knn: labels must be 0 or 1");
    }
  }
  KnnClassifier model;
  model.k = k;
  model.train_x = x;
  model.train_y = y;
  return model;
}

int KnnClassifier::predict_one(const Eigen::VectorXd& x) const {
  if (x.size() != train_x.cols()) {
    throw EvalError("knn: input width mismatch");
  }
  // (distance, train index) pairs; the index makes tie order deterministic.
  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(static_cast<std::size_t>(train_x.rows()));
  for (Eigen::Index i = 0; i < train_x.rows(); ++i) {
    dist.emplace_back((train_x.row(i).transpose() - x).squaredNorm(), i);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  int positives = 0;
  for (int i = 0; i < k; ++i) {
    positives += train_y[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)];
  }
  return 2 * positives >= k ? 1 : 0;  // even split counts as anomalous
}

std::vector<int> KnnClassifier::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict_one(x.row(i).transpose());
  }
  return out;
}

}  // namespace gridwatch
