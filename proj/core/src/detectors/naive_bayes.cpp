#include "gridwatch/detectors/naive_bayes.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gridwatch/errors.hpp"

namespace gridwatch {

GaussianNb GaussianNb::fit(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    throw TrainError("naive bayes: bad training shape");
  }
  Eigen::Vector2i counts(0, 0);
  for (const int label : y) {
    if (label != 0 && label != 1) {
      throw TrainError("naive bayes: labels must be 0 or 1");
    }
    ++counts(label);
  }
  if (counts(0) == 0 || counts(1) == 0) {
    throw TrainError("naive bayes: training data contains a single class");
  }

  GaussianNb model;
  model.mean = Eigen::MatrixXd::Zero(2, d);
  model.var = Eigen::MatrixXd::Zero(2, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    model.mean.row(y[static_cast<std::size_t>(i)]) += x.row(i);
  }
  for (int c = 0; c < 2; ++c) {
    model.mean.row(c) /= static_cast<double>(counts(c));
    model.log_prior(c) = std::log(static_cast<double>(counts(c)) / static_cast<double>(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    model.var.row(c) += (x.row(i) - model.mean.row(c)).array().square().matrix();
  }
  for (int c = 0; c < 2; ++c) {
    model.var.row(c) /= static_cast<double>(counts(c));
  }

  // Overall per-feature variance sets the floor scale; keep a hard minimum
  // so an all-constant matrix still yields finite densities.
  const Eigen::RowVectorXd overall_mean = x.colwise().mean();
  const Eigen::RowVectorXd overall_var =
      (x.rowwise() - overall_mean).array().square().colwise().mean();
  const double floor = std::max(1e-9 * overall_var.maxCoeff(), 1e-12);
  model.var = model.var.cwiseMax(floor);
  return model;
}

double GaussianNb::log_joint(const Eigen::VectorXd& x, int cls) const {
  if (x.size() != mean.cols()) {
    throw EvalError("naive bayes: input width " + std::to_string(x.size()) +
                    ", model expects " + std::to_string(mean.cols()));
  }
  double acc = log_prior(cls);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double v = var(cls, j);
    const double diff = x(j) - mean(cls, j);
    acc += -0.5 * std::log(2.0 * std::numbers::pi * v) - diff * diff / (2.0 * v);
  }
  return acc;
}

int GaussianNb::predict_one(const Eigen::VectorXd& x) const {
  // Ties go to the anomalous class.
  return log_joint(x, 1) >= log_joint(x, 0) ? 1 : 0;
}

std::vector<int> GaussianNb::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict_one(x.row(i).transpose());
  }
  return out;
}

}  // namespace gridwatch
