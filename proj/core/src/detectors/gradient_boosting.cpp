#include "gridwatch/detectors/gradient_boosting.hpp"

#include <algorithm>
#include <cmath>

#include "gridwatch/errors.hpp"

namespace gridwatch {

namespace {

double softplus(double f) {
  return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
}

double sigmoid(double f) { return 1.0 / (1.0 + std::exp(-f)); }

constexpr double kLeafClamp = 4.0;  // keeps Newton steps sane in saturated leaves

}  // namespace

GradientBoosting GradientBoosting::fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                       const FitOpts& opts) {
  const auto n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    throw TrainError("gradient boosting: bad training shape");
  }
  if (opts.stage_count < 1 || opts.max_depth < 1) {
    throw TrainError("gradient boosting: bad fit options");
  }
  Eigen::VectorXd yd(n);
  double positives = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    if (label != 0 && label != 1) {
      throw TrainError("gradient boosting: labels must be 0 or 1");
    }
    yd(i) = label;
    positives += label;
  }
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    throw TrainError("gradient boosting: training data contains a single class");
  }

  GradientBoosting model;
  model.shrinkage = opts.shrinkage;
  const double p0 = positives / static_cast<double>(n);
  model.f0 = std::log(p0 / (1.0 - p0));

  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, model.f0);
  DecisionTree::FitOpts tree_opts;
  tree_opts.criterion = DecisionTree::Criterion::mse;
  tree_opts.max_depth = opts.max_depth;

  model.stages.reserve(static_cast<std::size_t>(opts.stage_count));
  model.train_loss.reserve(static_cast<std::size_t>(opts.stage_count));
  for (int stage = 0; stage < opts.stage_count; ++stage) {
    Eigen::VectorXd prob(n), residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(f(i));
      residual(i) = yd(i) - prob(i);
    }

    DecisionTree tree = DecisionTree::fit(x, residual, tree_opts);

    // Replace each leaf's mean-residual value with the Newton step
    // sum(residual) / sum(p (1 - p)) over the samples landing there.
    std::vector<double> grad(tree.nodes.size(), 0.0), hess(tree.nodes.size(), 0.0);
    std::vector<int> leaf_of(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const int leaf = tree.leaf_index(x.row(i).transpose());
      leaf_of[static_cast<std::size_t>(i)] = leaf;
      grad[static_cast<std::size_t>(leaf)] += residual(i);
      hess[static_cast<std::size_t>(leaf)] += prob(i) * (1.0 - prob(i));
    }
    for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
      if (tree.nodes[node].feature >= 0) continue;
      const double value = grad[node] / std::max(hess[node], 1e-12);
      tree.nodes[node].value = std::clamp(value, -kLeafClamp, kLeafClamp);
    }

    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      f(i) += opts.shrinkage * tree.nodes[static_cast<std::size_t>(
                                              leaf_of[static_cast<std::size_t>(i)])].value;
      loss += softplus(f(i)) - yd(i) * f(i);
    }
    model.train_loss.push_back(loss / static_cast<double>(n));
    model.stages.push_back(std::move(tree));
  }
  return model;
}

double GradientBoosting::raw_score(const Eigen::VectorXd& x) const {
  double f = f0;
  for (const auto& tree : stages) {
    f += shrinkage * tree.predict_value(x);
  }
  return f;
}

double GradientBoosting::probability(const Eigen::VectorXd& x) const {
  return sigmoid(raw_score(x));
}

int GradientBoosting::predict_one(const Eigen::VectorXd& x) const {
  return raw_score(x) >= 0.0 ? 1 : 0;
}

std::vector<int> GradientBoosting::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict_one(x.row(i).transpose());
  }
  return out;
}

}  // namespace gridwatch
