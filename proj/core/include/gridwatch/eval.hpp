#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detectors/model.hpp"
#include "gridwatch/features.hpp"
#include "gridwatch/metrics.hpp"

namespace gridwatch {

/// Everything measured for one (plant, feature config, algorithm) cell.
struct EvalResult {
  std::string target;
  std::string feature_key;
  Algo algo = Algo::nbc;
  HyperPoint hyper;
  std::int64_t rows = 0;
  ConfusionCounts confusion;
  std::optional<double> f2;
  std::optional<double> precision;
  std::optional<double> recall;
  // Regression extras.
  std::optional<double> r2;
  std::optional<double> relative_error;  // RMSE / rated power
  std::optional<double> threshold;       // residual tau in MW
  bool threshold_separating = true;
  double train_seconds = 0.0;
  std::uint64_t seed = 0;
};

EvalResult evaluate_classifier(const ClassifierModel& model, const Eigen::MatrixXd& x_test,
                               const std::vector<std::uint8_t>& labels);

/// `reported` is what the detector sees for the target, `truth` the actual
/// output; both over the same test rows as x_test.
EvalResult evaluate_residual(const ResidualDetector& detector, const Eigen::MatrixXd& x_test,
                             const Eigen::VectorXd& reported, const Eigen::VectorXd& truth,
                             const std::vector<std::uint8_t>& labels);

std::string eval_result_to_json(const EvalResult& result);
EvalResult eval_result_from_json(const std::string& text);

}  // namespace gridwatch
