#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gridwatch {

class Rng;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf value: class-1 fraction (gini) or mean (mse)
  double n0 = 0.0;     // training samples per class at a gini leaf
  double n1 = 0.0;
};

/// Exact greedy binary tree. Every candidate threshold (midpoints between
/// adjacent distinct values of a feature) is scanned; the split minimising
/// the weighted child impurity wins, first feature in scan order on ties.
/// Traversal sends x(feature) <= threshold to the left child.
struct DecisionTree {
  enum class Criterion { gini, mse };

  struct FitOpts {
    Criterion criterion = Criterion::gini;
    int max_depth = 64;
    int min_samples_leaf = 1;
    int max_features = 0;  // 0 = use all; otherwise sample that many per node
  };

  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// `sample` lists training row indices (repeats allowed, for bootstraps);
  /// null means all rows. `rng` drives the per-node feature subsample and is
  /// required when max_features > 0.
  static DecisionTree fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const FitOpts& opts, Rng* rng = nullptr,
                          const std::vector<std::int64_t>* sample = nullptr);

  int leaf_index(const Eigen::VectorXd& x) const;
  double predict_value(const Eigen::VectorXd& x) const;
  int leaf_count() const;
};

}  // namespace gridwatch
