#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detectors/gradient_boosting.hpp"
#include "gridwatch/detectors/knn.hpp"
#include "gridwatch/detectors/linear_svc.hpp"
#include "gridwatch/detectors/mlp.hpp"
#include "gridwatch/detectors/naive_bayes.hpp"
#include "gridwatch/detectors/random_forest.hpp"
#include "gridwatch/detectors/residual.hpp"
#include "gridwatch/features.hpp"

namespace gridwatch {

enum class Algo { nbc, knnc, svc, rfc, gbc, mlpc, mlpr };

std::string to_string(Algo algo);
Algo algo_from_string(const std::string& s);
bool algo_is_regressor(Algo algo);

/// One grid point: only the fields the algorithm reads are set.
struct HyperPoint {
  std::optional<int> k;                       // knnc
  std::optional<double> c;                    // svc
  std::optional<int> trees;                   // rfc
  std::optional<int> stages;                  // gbc
  std::optional<std::vector<int>> hidden;     // mlpc / mlpr

  std::string key() const;  // stable, e.g. "k=5" or "hidden=200x2"
  /// Lower = simpler; used to break cross-validation ties. Per algorithm:
  /// knnc prefers larger k, svc smaller C, rfc fewer trees, gbc fewer
  /// stages, mlp fewer and narrower layers.
  double complexity() const;
};

struct HyperGrid {
  Algo algo = Algo::nbc;
  std::vector<HyperPoint> points;
};

/// The search space from the study this harness reproduces.
HyperGrid default_hyper_grid(Algo algo);

struct FitInfo {
  std::uint64_t seed = 0;
  int epochs_run = 0;
  double train_seconds = 0.0;
};

/// A trained classifier plus the input scaling it owns. Distance- and
/// gradient-based algorithms (knnc, svc, mlpc) standardize inputs
/// internally; the others take features raw.
struct ClassifierModel {
  Algo algo = Algo::nbc;
  HyperPoint hyper;
  std::optional<Scaler> scaler;
  FitInfo info;
  std::variant<GaussianNb, KnnClassifier, LinearSvc, RandomForest, GradientBoosting, Mlp> impl;

  int predict_one(const Eigen::VectorXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

struct RegressorModel {
  Algo algo = Algo::mlpr;
  HyperPoint hyper;
  std::optional<Scaler> scaler;
  FitInfo info;
  Mlp impl;

  double predict_one(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Residual detector: regressor plus fitted threshold.
struct ResidualDetector {
  RegressorModel regressor;
  ResidualThreshold threshold;
};

/// x is the raw (unstandardized) feature matrix; scaling is fitted here when
/// the algorithm wants it. Throws TrainError on single-class labels or
/// non-finite inputs.
ClassifierModel train_classifier(Algo algo, const Eigen::MatrixXd& x, const std::vector<int>& y,
                                 const HyperPoint& hyper, std::uint64_t seed);
RegressorModel train_regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const HyperPoint& hyper, std::uint64_t seed);

std::string classifier_to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const std::string& text);
std::string regressor_to_json(const RegressorModel& model);
RegressorModel regressor_from_json(const std::string& text);
std::string residual_detector_to_json(const ResidualDetector& detector);
ResidualDetector residual_detector_from_json(const std::string& text);

}  // namespace gridwatch
