#include "gridwatch/detectors/residual.hpp"

#include <algorithm>
#include <cmath>

#include "gridwatch/errors.hpp"
#include "gridwatch/metrics.hpp"

namespace gridwatch {

double clip_prediction(double predicted, double rated_power) {
  return std::clamp(predicted, 0.0, rated_power);
}

ResidualThreshold fit_threshold(const Eigen::VectorXd& predicted,
                                const Eigen::VectorXd& reported,
                                const std::vector<std::uint8_t>& labels, double rated_power) {
  const auto n = predicted.size();
  if (n < 2 || reported.size() != n || static_cast<Eigen::Index>(labels.size()) != n) {
    throw TrainError("fit_threshold: bad holdout shape");
  }
  if (!(rated_power > 0.0)) {
    throw TrainError("fit_threshold: rated power must be positive");
  }

  // (residual, label) sorted ascending by residual.
  std::vector<std::pair<double, int>> points;
  points.reserve(static_cast<std::size_t>(n));
  std::int64_t total_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::abs(reported(i) - clip_prediction(predicted(i), rated_power));
    const int label = labels[static_cast<std::size_t>(i)] ? 1 : 0;
    points.emplace_back(r, label);
    total_pos += label;
  }
  if (total_pos == 0) {
    throw TrainError("fit_threshold: holdout has no anomalous labels");
  }
  std::sort(points.begin(), points.end());

  ResidualThreshold fit;
  fit.rated_power = rated_power;

  if (points.front().first == points.back().first) {
    // Every residual identical: no midpoint separates anything.
    fit.separating = false;
    fit.threshold = std::max(points.front().first, 1e-12);
    fit.holdout_f2 = 0.0;
    return fit;
  }

  // Sweep candidates from small to large; rows above the candidate are the
  // predicted positives, so counts shrink as the threshold grows.
  std::int64_t tp = total_pos;
  std::int64_t fp = static_cast<std::int64_t>(n) - total_pos;
  double best_score = -1.0;
  std::size_t i = 0;
  while (i < points.size()) {
    // Consume the group of equal residuals below the next midpoint.
    const double value = points[i].first;
    while (i < points.size() && points[i].first == value) {
      tp -= points[i].second;
      fp -= 1 - points[i].second;
      ++i;
    }
    if (i == points.size()) break;
    const double tau = value + (points[i].first - value) / 2.0;
    const std::int64_t fn = total_pos - tp;
    const std::int64_t denom = 5 * tp + 4 * fn + fp;
    const double score = denom == 0 ? 0.0 : 5.0 * static_cast<double>(tp) / static_cast<double>(denom);
    if (score >= best_score) {  // >= resolves ties toward the larger threshold
      best_score = score;
      fit.threshold = tau;
    }
  }
  fit.holdout_f2 = best_score;
  return fit;
}

int detect_residual(const ResidualThreshold& fit, double predicted, double reported) {
  return std::abs(reported - clip_prediction(predicted, fit.rated_power)) > fit.threshold ? 1 : 0;
}

std::vector<int> detect_residual_batch(const ResidualThreshold& fit,
                                       const Eigen::VectorXd& predicted,
                                       const Eigen::VectorXd& reported) {
  if (predicted.size() != reported.size()) {
    throw EvalError("detect_residual_batch: length mismatch");
  }
  std::vector<int> out(static_cast<std::size_t>(predicted.size()));
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    out[static_cast<std::size_t>(i)] = detect_residual(fit, predicted(i), reported(i));
  }
  return out;
}

}  // namespace gridwatch
