#include "gridwatch/search.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "gridwatch/errors.hpp"
#include "gridwatch/metrics.hpp"
#include "gridwatch/parallel.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

namespace {

struct FoldData {
  Eigen::MatrixXd train_x, val_x;
  Eigen::VectorXd train_y, val_y;
};

FoldData slice_fold(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const std::vector<std::vector<std::int64_t>>& folds, std::size_t held) {
  std::vector<std::int64_t> train_rows, val_rows;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    auto& dst = f == held ? val_rows : train_rows;
    dst.insert(dst.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(val_rows.begin(), val_rows.end());

  FoldData d;
  d.train_x.resize(static_cast<Eigen::Index>(train_rows.size()), x.cols());
  d.train_y.resize(static_cast<Eigen::Index>(train_rows.size()));
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    d.train_x.row(static_cast<Eigen::Index>(i)) = x.row(train_rows[i]);
    d.train_y(static_cast<Eigen::Index>(i)) = y(train_rows[i]);
  }
  d.val_x.resize(static_cast<Eigen::Index>(val_rows.size()), x.cols());
  d.val_y.resize(static_cast<Eigen::Index>(val_rows.size()));
  for (std::size_t i = 0; i < val_rows.size(); ++i) {
    d.val_x.row(static_cast<Eigen::Index>(i)) = x.row(val_rows[i]);
    d.val_y(static_cast<Eigen::Index>(i)) = y(val_rows[i]);
  }
  return d;
}

FoldScore score_classifier_fold(Algo algo, const HyperPoint& point, const FoldData& d,
                                std::uint64_t seed) {
  FoldScore out;
  int train_pos = 0;
  std::vector<int> train_y(static_cast<std::size_t>(d.train_y.size()));
  for (Eigen::Index i = 0; i < d.train_y.size(); ++i) {
    train_y[static_cast<std::size_t>(i)] = d.train_y(i) != 0.0 ? 1 : 0;
    train_pos += train_y[static_cast<std::size_t>(i)];
  }
  if (train_pos == 0 || train_pos == static_cast<int>(train_y.size())) {
    out.skipped = true;
    out.note = "single-class training fold";
    return out;
  }
  std::vector<std::uint8_t> val_y(static_cast<std::size_t>(d.val_y.size()));
  for (Eigen::Index i = 0; i < d.val_y.size(); ++i) {
    val_y[static_cast<std::size_t>(i)] = d.val_y(i) != 0.0 ? 1 : 0;
  }

  const ClassifierModel model = train_classifier(algo, d.train_x, train_y, point, seed);
  const auto f2 = f2_score(confusion_from(model.predict(d.val_x), val_y));
  if (!f2) {
    out.skipped = true;
    out.note = "F2 undefined on validation fold";
    return out;
  }
  out.score = *f2;
  return out;
}

FoldScore score_regressor_fold(const HyperPoint& point, const FoldData& d, std::uint64_t seed) {
  FoldScore out;
  const RegressorModel model = train_regressor(d.train_x, d.train_y, point, seed);
  const Eigen::VectorXd pred = model.predict(d.val_x);
  std::vector<double> y_true(static_cast<std::size_t>(d.val_y.size()));
  std::vector<double> y_pred(static_cast<std::size_t>(d.val_y.size()));
  for (Eigen::Index i = 0; i < d.val_y.size(); ++i) {
    y_true[static_cast<std::size_t>(i)] = d.val_y(i);
    y_pred[static_cast<std::size_t>(i)] = pred(i);
  }
  const auto r2 = r2_score(y_true, y_pred);
  if (!r2) {
    out.skipped = true;
    out.note = "constant validation target, R2 undefined";
    return out;
  }
  out.score = *r2;
  return out;
}

}  // namespace

GridSearchLog grid_search_cv(Algo algo, const std::vector<HyperPoint>& points,
                             const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::vector<std::int64_t>>& folds,
                             const CvOptions& opts) {
  if (points.empty()) {
    throw TrainError("grid_search_cv: empty hyperparameter grid");
  }
  if (folds.size() < 2) {
    throw TrainError("grid_search_cv: need at least 2 folds");
  }
  for (const auto& fold : folds) {
    for (const auto row : fold) {
      if (row < 0 || row >= x.rows()) {
        throw TrainError("grid_search_cv: fold row out of range");
      }
    }
  }

  GridSearchLog log;
  log.algo = algo;
  log.points = points;
  log.fold_scores.assign(points.size(), std::vector<FoldScore>(folds.size()));

  // Slice fold matrices once, then fan (point, fold) units out to workers.
  std::vector<FoldData> fold_data(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    fold_data[f] = slice_fold(x, y, folds, f);
  }

  const std::size_t unit_count = points.size() * folds.size();
  parallel_for(unit_count, opts.workers, [&](std::size_t unit) {
    const std::size_t p = unit / folds.size();
    const std::size_t f = unit % folds.size();
    const std::uint64_t seed =
        derive_seed(opts.seed, points[p].key() + ":fold" + std::to_string(f));
    log.fold_scores[p][f] = algo_is_regressor(algo)
                                ? score_regressor_fold(points[p], fold_data[f], seed)
                                : score_classifier_fold(algo, points[p], fold_data[f], seed);
  });

  log.mean_score.assign(points.size(), std::nullopt);
  for (std::size_t p = 0; p < points.size(); ++p) {
    double sum = 0.0;
    int counted = 0;
    for (const auto& fs : log.fold_scores[p]) {
      if (fs.score) {
        sum += *fs.score;
        ++counted;
      }
    }
    if (counted > 0) {
      log.mean_score[p] = sum / counted;
    }
  }

  constexpr double kTieEps = 1e-12;
  int best = -1;
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (!log.mean_score[p]) continue;
    if (best < 0) {
      best = static_cast<int>(p);
      continue;
    }
    const double cur = *log.mean_score[p];
    const double top = *log.mean_score[static_cast<std::size_t>(best)];
    if (cur > top + kTieEps) {
      best = static_cast<int>(p);
    } else if (std::abs(cur - top) <= kTieEps &&
               points[p].complexity() <
                   log.points[static_cast<std::size_t>(best)].complexity()) {
      best = static_cast<int>(p);
    }
  }
  if (best < 0) {
    throw TrainError("grid_search_cv: every fold failed for every grid point");
  }
  log.best_index = best;
  return log;
}

ClassifierModel refit_best_classifier(const GridSearchLog& log, const Eigen::MatrixXd& x,
                                      const std::vector<int>& y, std::uint64_t seed) {
  if (log.best_index < 0) {
    throw TrainError("refit: search log has no winner");
  }
  return train_classifier(log.algo, x, y,
                          log.points[static_cast<std::size_t>(log.best_index)],
                          derive_seed(seed, "refit"));
}

RegressorModel refit_best_regressor(const GridSearchLog& log, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y, std::uint64_t seed) {
  if (log.best_index < 0) {
    throw TrainError("refit: search log has no winner");
  }
  return train_regressor(x, y, log.points[static_cast<std::size_t>(log.best_index)],
                         derive_seed(seed, "refit"));
}

std::string search_log_to_json(const GridSearchLog& log) {
  nlohmann::json j;
  j["algo"] = to_string(log.algo);
  j["best_index"] = log.best_index;
  if (log.best_index >= 0) {
    j["best"] = log.points[static_cast<std::size_t>(log.best_index)].key();
  }
  j["points"] = nlohmann::json::array();
  for (std::size_t p = 0; p < log.points.size(); ++p) {
    nlohmann::json pj;
    pj["key"] = log.points[p].key();
    pj["mean_score"] = log.mean_score[p] ? nlohmann::json(*log.mean_score[p])
                                         : nlohmann::json(nullptr);
    pj["folds"] = nlohmann::json::array();
    for (const auto& fs : log.fold_scores[p]) {
      nlohmann::json fj;
      fj["skipped"] = fs.skipped;
      if (!fs.note.empty()) fj["note"] = fs.note;
      fj["score"] = fs.score ? nlohmann::json(*fs.score) : nlohmann::json(nullptr);
      pj["folds"].push_back(fj);
    }
    j["points"].push_back(pj);
  }
  return j.dump(2) + "\n";
}

}  // namespace gridwatch
