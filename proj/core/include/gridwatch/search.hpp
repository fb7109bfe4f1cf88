#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/detectors/model.hpp"

namespace gridwatch {

struct FoldScore {
  bool skipped = false;
  std::string note;               // why a fold was skipped
  std::optional<double> score;    // F2 (classifier) or R^2 (regressor)
};

struct GridSearchLog {
  Algo algo = Algo::nbc;
  std::vector<HyperPoint> points;
  std::vector<std::vector<FoldScore>> fold_scores;   // [point][fold]
  std::vector<std::optional<double>> mean_score;     // empty when all folds skipped
  int best_index = -1;
};

struct CvOptions {
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Scores every (point, fold) pair: train on the other folds, score on the
/// held one (classifiers by F2, the regressor by R^2). Folds whose training
/// part is single-class or whose validation part leaves the metric undefined
/// are skipped and flagged. Selection maximizes the mean over scored folds;
/// ties within 1e-12 go to the simpler point (HyperPoint::complexity), then
/// the lower grid index. Throws TrainError when no point scores at all.
///
/// `x`/`y` cover only the cross-validation rows; `folds` hold local row
/// indices into them. y carries 0/1 labels for classifiers, MW for the
/// regressor. Refitting is a separate step so callers can refit on a larger
/// row set (the full training split).
GridSearchLog grid_search_cv(Algo algo, const std::vector<HyperPoint>& points,
                             const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::vector<std::int64_t>>& folds,
                             const CvOptions& opts);

ClassifierModel refit_best_classifier(const GridSearchLog& log, const Eigen::MatrixXd& x,
                                      const std::vector<int>& y, std::uint64_t seed);
RegressorModel refit_best_regressor(const GridSearchLog& log, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y, std::uint64_t seed);

std::string search_log_to_json(const GridSearchLog& log);

}  // namespace gridwatch
