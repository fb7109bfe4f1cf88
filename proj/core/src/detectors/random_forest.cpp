#include "gridwatch/detectors/random_forest.hpp"

#include <cmath>
#include <string>

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

RandomForest RandomForest::fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
                               const FitOpts& opts, std::uint64_t seed) {
  const auto n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    throw TrainError("random forest: bad training shape");
  }
  if (opts.tree_count < 1) {
    throw TrainError("random forest: tree count must be positive");
  }
  Eigen::VectorXd yd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    if (label != 0 && label != 1) {
      throw TrainError("random forest: labels must be 0 or 1");
    }
    yd(i) = label;
  }

  DecisionTree::FitOpts tree_opts;
  tree_opts.criterion = DecisionTree::Criterion::gini;
  tree_opts.max_depth = opts.max_depth;
  tree_opts.min_samples_leaf = opts.min_samples_leaf;
  tree_opts.max_features =
      std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));

  RandomForest forest;
  forest.trees.reserve(static_cast<std::size_t>(opts.tree_count));
  for (int t = 0; t < opts.tree_count; ++t) {
    Rng rng(derive_seed(seed, "tree:" + std::to_string(t)));
    std::vector<std::int64_t> bootstrap(static_cast<std::size_t>(n));
    for (auto& i : bootstrap) {
      i = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
    }
    forest.trees.push_back(DecisionTree::fit(x, yd, tree_opts, &rng, &bootstrap));
  }
  return forest;
}

double RandomForest::vote_fraction(const Eigen::VectorXd& x) const {
  int anomalous = 0;
  for (const auto& tree : trees) {
    // Leaf class = majority in the leaf, a tied leaf counting as anomalous.
    if (tree.predict_value(x) >= 0.5) ++anomalous;
  }
  return static_cast<double>(anomalous) / static_cast<double>(trees.size());
}

int RandomForest::predict_one(const Eigen::VectorXd& x) const {
  return vote_fraction(x) >= 0.5 ? 1 : 0;
}

std::vector<int> RandomForest::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict_one(x.row(i).transpose());
  }
  return out;
}

}  // namespace gridwatch
