#include "gridwatch/detectors/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const DecisionTree::FitOpts& opts;
  Rng* rng;
  std::vector<TreeNode>& nodes;

  struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // weighted child impurity, lower is better
  };

  // Weighted impurity of one side from its aggregates.
  double impurity(double n, double sum, double sumsq) const {
    if (n <= 0.0) return 0.0;
    if (opts.criterion == DecisionTree::Criterion::gini) {
      // y is 0/1, so `sum` counts class 1:  n * gini = n - (n0^2 + n1^2) / n
      const double n1 = sum;
      const double n0 = n - sum;
      return n - (n0 * n0 + n1 * n1) / n;
    }
    return sumsq - sum * sum / n;  // n * variance
  }

  Split best_split(const std::vector<std::int64_t>& idx) const {
    const auto n = static_cast<double>(idx.size());
    double total_sum = 0.0, total_sq = 0.0;
    for (const auto i : idx) {
      total_sum += y(i);
      total_sq += y(i) * y(i);
    }

    std::vector<Eigen::Index> features;
    if (opts.max_features > 0 && opts.max_features < x.cols()) {
      const auto picks = rng->sample_without_replacement(x.cols(), opts.max_features);
      features.assign(picks.begin(), picks.end());
    } else {
      features.resize(static_cast<std::size_t>(x.cols()));
      std::iota(features.begin(), features.end(), 0);
    }

    Split best;
    std::vector<std::int64_t> order(idx);
    for (const auto f : features) {
      std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
        return a < b;
      });
      double left_n = 0.0, left_sum = 0.0, left_sq = 0.0;
      for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const auto prev = order[pos - 1];
        left_n += 1.0;
        left_sum += y(prev);
        left_sq += y(prev) * y(prev);
        const double lo = x(prev, f);
        const double hi = x(order[pos], f);
        if (lo == hi) continue;
        if (left_n < opts.min_samples_leaf || n - left_n < opts.min_samples_leaf) continue;
        const double score = impurity(left_n, left_sum, left_sq) +
                             impurity(n - left_n, total_sum - left_sum, total_sq - left_sq);
        if (!best.found || score < best.score) {
          best.found = true;
          best.feature = static_cast<int>(f);
          best.threshold = lo + (hi - lo) / 2.0;
          best.score = score;
        }
      }
    }
    return best;
  }

  int build(const std::vector<std::int64_t>& idx, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    double sum = 0.0;
    for (const auto i : idx) sum += y(i);
    const auto n = static_cast<double>(idx.size());
    nodes[static_cast<std::size_t>(node_id)].value = sum / n;
    if (opts.criterion == DecisionTree::Criterion::gini) {
      nodes[static_cast<std::size_t>(node_id)].n1 = sum;
      nodes[static_cast<std::size_t>(node_id)].n0 = n - sum;
    }

    bool pure = true;
    for (const auto i : idx) {
      if (y(i) != y(idx.front())) {
        pure = false;
        break;
      }
    }
    if (pure || depth >= opts.max_depth ||
        static_cast<int>(idx.size()) < 2 * opts.min_samples_leaf) {
      return node_id;
    }

    const Split split = best_split(idx);
    if (!split.found) {
      return node_id;
    }

    std::vector<std::int64_t> left, right;
    for (const auto i : idx) {
      (x(i, split.feature) <= split.threshold ? left : right).push_back(i);
    }
    // Midpoints can round onto a sample value; refuse empty children.
    if (left.empty() || right.empty()) {
      return node_id;
    }
    const int left_id = build(left, depth + 1);
    const int right_id = build(right, depth + 1);
    auto& node = nodes[static_cast<std::size_t>(node_id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_id;
    node.right = right_id;
    return node_id;
  }
};

}  // namespace

DecisionTree DecisionTree::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const FitOpts& opts, Rng* rng,
                               const std::vector<std::int64_t>* sample) {
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw TrainError("tree: bad training shape");
  }
  if (opts.max_depth < 1 || opts.min_samples_leaf < 1) {
    throw TrainError("tree: bad fit options");
  }
  if (opts.max_features > 0 && rng == nullptr) {
    throw TrainError("tree: feature subsampling needs an rng");
  }
  if (opts.criterion == Criterion::gini) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) {
        throw TrainError("tree: gini labels must be 0 or 1");
      }
    }
  }

  std::vector<std::int64_t> idx;
  if (sample != nullptr) {
    idx = *sample;
    for (const auto i : idx) {
      if (i < 0 || i >= x.rows()) {
        throw TrainError("tree: sample index out of range");
      }
    }
    if (idx.empty()) {
      throw TrainError("tree: empty sample");
    }
  } else {
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), 0);
  }

  DecisionTree tree;
  Builder builder{x, y, opts, rng, tree.nodes};
  builder.build(idx, 0);
  return tree;
}

int DecisionTree::leaf_index(const Eigen::VectorXd& x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return node;
}

double DecisionTree::predict_value(const Eigen::VectorXd& x) const {
  return nodes[static_cast<std::size_t>(leaf_index(x))].value;
}

int DecisionTree::leaf_count() const {
  int count = 0;
  for (const auto& n : nodes) {
    if (n.feature < 0) ++count;
  }
  return count;
}

}  // namespace gridwatch
