#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gridwatch {

/// Fully connected net with rectifier hidden layers and a single output:
/// sigmoid + cross-entropy when classifying, identity + mean squared error
/// (on an internally standardized target) when regressing. Trained with
/// seeded minibatch Adam; early stopping watches an internal validation
/// split (F2 for classifiers, MSE for regressors) and restores the best
/// weights seen.
struct MlpOpts {
  std::vector<int> hidden = {50};
  bool classifier = true;
  int max_epochs = 200;
  int batch_size = 128;
  double learning_rate = 1e-3;
  int patience = 10;
  double min_delta = 1e-6;
  double validation_fraction = 0.1;
};

struct Mlp {
  std::vector<Eigen::MatrixXd> w;  // per layer, out x in
  std::vector<Eigen::VectorXd> b;
  bool classifier = true;
  double y_mean = 0.0;   // regression target transform
  double y_scale = 1.0;
  int epochs_run = 0;

  static Mlp fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpOpts& opts,
                 std::uint64_t seed);

  /// Classifier: probability of the anomalous class. Regressor: MW.
  Eigen::VectorXd predict_values(const Eigen::MatrixXd& x) const;
  double predict_value(const Eigen::VectorXd& x) const;
  int predict_label(const Eigen::VectorXd& x) const;  // probability >= 0.5
  std::vector<int> predict_labels(const Eigen::MatrixXd& x) const;

  /// Mean loss over the batch and its gradient at the current weights, in
  /// the same target units fit() takes. Exposed for numeric gradient checks.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::vector<Eigen::MatrixXd>& gw,
                           std::vector<Eigen::VectorXd>& gb) const;
};

}  // namespace gridwatch
