#include "gridwatch/detectors/linear_svc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

LinearSvc LinearSvc::fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const FitOpts& opts, std::uint64_t seed) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    throw TrainError("svc: bad training shape");
  }
  if (!(opts.c > 0.0)) {
    throw TrainError("svc: C must be positive");
  }
  if (opts.epochs < 1 || opts.batch_size < 1) {
    throw TrainError("svc: epochs and batch size must be positive");
  }
  Eigen::VectorXd sign(n);
  int positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    if (label != 0 && label != 1) {
      throw TrainError("svc: labels must be 0 or 1");
    }
    sign(i) = label == 1 ? 1.0 : -1.0;
    positives += label;
  }
  if (positives == 0 || positives == static_cast<int>(n)) {
    throw TrainError("svc: training data contains a single class");
  }

  const double lambda = 1.0 / (static_cast<double>(n) * opts.c);
  const double radius = 1.0 / std::sqrt(lambda);

  LinearSvc model;
  model.c = opts.c;
  model.w = Eigen::VectorXd::Zero(d);
  model.b = 0.0;

  Rng rng(seed);
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  const std::int64_t batches_per_epoch =
      (n + opts.batch_size - 1) / static_cast<std::int64_t>(opts.batch_size);
  const std::int64_t total_steps = batches_per_epoch * opts.epochs;
  const std::int64_t avg_from = total_steps / 2;  // tail-average for stability

  Eigen::VectorXd avg_w = Eigen::VectorXd::Zero(d);
  double avg_b = 0.0;
  std::int64_t avg_count = 0;

  std::int64_t step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::int64_t start = 0; start < n; start += opts.batch_size) {
      const std::int64_t size = std::min<std::int64_t>(opts.batch_size, n - start);
      ++step;
      const double eta = 1.0 / (lambda * static_cast<double>(step));

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
      double grad_b = 0.0;
      for (std::int64_t i = start; i < start + size; ++i) {
        const auto row = order[static_cast<std::size_t>(i)];
        const double margin = sign(row) * (model.w.dot(x.row(row).transpose()) + model.b);
        if (margin < 1.0) {
          grad -= sign(row) * x.row(row).transpose();
          grad_b -= sign(row);
        }
      }
      grad /= static_cast<double>(size);
      grad_b /= static_cast<double>(size);

      model.w = (1.0 - eta * lambda) * model.w - eta * grad;
      model.b -= eta * grad_b;
      const double norm = model.w.norm();
      if (norm > radius) {
        model.w *= radius / norm;
      }
      if (step > avg_from) {
        avg_w += model.w;
        avg_b += model.b;
        ++avg_count;
      }
    }
  }
  if (avg_count > 0) {
    model.w = avg_w / static_cast<double>(avg_count);
    model.b = avg_b / static_cast<double>(avg_count);
  }
  return model;
}

double LinearSvc::score(const Eigen::VectorXd& x) const {
  if (x.size() != w.size()) {
    throw EvalError("svc: input width mismatch");
  }
  return w.dot(x) + b;
}

int LinearSvc::predict_one(const Eigen::VectorXd& x) const { return score(x) > 0.0 ? 1 : 0; }

std::vector<int> LinearSvc::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict_one(x.row(i).transpose());
  }
  return out;
}

double LinearSvc::objective(const Eigen::MatrixXd& x, const std::vector<int>& y) const {
  const auto n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    throw EvalError("svc objective: bad shape");
  }
  const double lambda = 1.0 / (static_cast<double>(n) * c);
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - s * (w.dot(x.row(i).transpose()) + b));
  }
  return 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(n);
}

}  // namespace gridwatch
