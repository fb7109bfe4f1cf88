#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gridwatch {

/// Thresholded-residual anomaly detection around a point regressor: a step
/// is anomalous iff |reported - predicted| > threshold, with predictions
/// clipped to [0, rated] first.
///
/// fit_threshold picks the threshold maximising F2 on a labelled holdout,
/// scanning the midpoints between adjacent distinct residuals and taking
/// the larger threshold on F2 ties. When every holdout residual is equal
/// the fit is flagged non-separating.
struct ResidualThreshold {
  double threshold = 0.0;
  double rated_power = 0.0;
  bool separating = true;
  double holdout_f2 = 0.0;
};

/// `predicted` are the regressor outputs (pre-clip) on the holdout rows,
/// `reported` the values the detector would see, `labels` ground truth.
ResidualThreshold fit_threshold(const Eigen::VectorXd& predicted,
                                const Eigen::VectorXd& reported,
                                const std::vector<std::uint8_t>& labels, double rated_power);

double clip_prediction(double predicted, double rated_power);

int detect_residual(const ResidualThreshold& fit, double predicted, double reported);

std::vector<int> detect_residual_batch(const ResidualThreshold& fit,
                                       const Eigen::VectorXd& predicted,
                                       const Eigen::VectorXd& reported);

}  // namespace gridwatch
