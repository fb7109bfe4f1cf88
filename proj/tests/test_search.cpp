#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/errors.hpp"
#include "gridwatch/search.hpp"
#include "test_support.hpp"

using namespace gridwatch;

namespace {

/// Two tight clusters 14 apart; labels in y as 0/1 doubles.
struct CvFixture {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::vector<std::int64_t>> folds;
};

/// `positives` rows sit at (10,10), the rest at (0,0), with deterministic
/// sub-0.1 jitter. Rows are dealt round-robin into three folds so every fold
/// sees both classes whenever positives >= 3.
CvFixture clustered_fixture(int rows, int positives) {
  CvFixture f;
  f.x = 0.1 * gwtest::random_matrix(rows, 2, 500 + rows + positives);
  f.y = Eigen::VectorXd::Zero(rows);
  for (int i = 0; i < positives; ++i) {
    f.x.row(i).array() += 10.0;
    f.y(i) = 1.0;
  }
  f.folds.assign(3, {});
  for (int r = 0; r < rows; ++r) {
    f.folds[static_cast<std::size_t>(r % 3)].push_back(r);
  }
  return f;
}

HyperPoint knn_point(int k) {
  HyperPoint p;
  p.k = k;
  return p;
}

}  // namespace

TEST_CASE("a singleton grid wins by default and refits cleanly") {
  const auto f = clustered_fixture(60, 30);
  const auto log = grid_search_cv(Algo::nbc, {HyperPoint{}}, f.x, f.y, f.folds, {42, 1});

  CHECK(log.algo == Algo::nbc);
  CHECK(log.best_index == 0);
  REQUIRE(log.fold_scores.size() == 1);
  CHECK(log.fold_scores[0].size() == 3);
  REQUIRE(log.mean_score[0].has_value());
  CHECK(*log.mean_score[0] == 1.0);  // trivially separable clusters

  std::vector<int> labels(60);
  for (int i = 0; i < 60; ++i) labels[static_cast<std::size_t>(i)] = f.y(i) != 0.0 ? 1 : 0;
  const auto model = refit_best_classifier(log, f.x, labels, 42);
  CHECK(model.algo == Algo::nbc);
  const auto again = refit_best_classifier(log, f.x, labels, 42);
  CHECK(again.predict(f.x) == model.predict(f.x));
}

TEST_CASE("a dominant grid point beats a simpler rival on score") {
  // Six positives split two per fold: with k=9 each validation positive sees
  // four positive and five negative training neighbours and is missed, while
  // k=1 memorizes the clusters. k=9 is the "simpler" point, so only a real
  // score gap can elect k=1.
  const auto f = clustered_fixture(60, 6);
  const std::vector<HyperPoint> points{knn_point(9), knn_point(1)};
  const auto log = grid_search_cv(Algo::knnc, points, f.x, f.y, f.folds, {7, 1});

  REQUIRE(log.mean_score[0].has_value());
  REQUIRE(log.mean_score[1].has_value());
  CHECK(*log.mean_score[0] == 0.0);
  CHECK(*log.mean_score[1] == 1.0);
  CHECK(log.best_index == 1);

  // The published mean is the average over scored folds, nothing fancier.
  for (std::size_t p = 0; p < log.points.size(); ++p) {
    double sum = 0.0;
    int counted = 0;
    for (const auto& fs : log.fold_scores[p]) {
      if (fs.score) {
        sum += *fs.score;
        ++counted;
      }
    }
    REQUIRE(counted > 0);
    CHECK(*log.mean_score[p] == sum / counted);
  }
}

TEST_CASE("exact ties resolve to the simplest point, for knn the largest k") {
  // Balanced tight clusters: k=1, k=5 and k=2 are all perfect, so the
  // winner must be the most-neighbours point regardless of grid order.
  const auto f = clustered_fixture(60, 30);
  const std::vector<HyperPoint> points{knn_point(1), knn_point(5), knn_point(2)};
  const auto log = grid_search_cv(Algo::knnc, points, f.x, f.y, f.folds, {7, 1});

  for (std::size_t p = 0; p < points.size(); ++p) {
    REQUIRE(log.mean_score[p].has_value());
    CHECK(*log.mean_score[p] == 1.0);
  }
  CHECK(log.best_index == 1);
  CHECK(log.points[static_cast<std::size_t>(log.best_index)].key() == "k=5");
}

TEST_CASE("folds that cannot be scored are skipped with a reason") {
  // All four positives live in fold 0, so fold 0 trains single-class. One
  // negative row is planted inside the positive cluster in fold 1, forcing a
  // false positive there (F2 = 0, still a score); fold 2 is all easy
  // negatives, so its F2 is undefined.
  CvFixture f;
  f.x = 0.1 * gwtest::random_matrix(30, 2, 321);
  f.y = Eigen::VectorXd::Zero(30);
  for (int i = 0; i < 4; ++i) {
    f.x.row(i).array() += 10.0;
    f.y(i) = 1.0;
  }
  f.x.row(7).array() += 10.0;  // trap negative, lives in fold 1 below
  f.folds.assign(3, {});
  f.folds[0] = {0, 1, 2, 3, 6, 9};
  f.folds[1] = {4, 5, 7, 10, 12, 14};
  f.folds[2] = {8, 11, 13, 15, 16, 17};

  const auto log = grid_search_cv(Algo::knnc, {knn_point(1)}, f.x, f.y, f.folds, {3, 1});

  CHECK(log.fold_scores[0][0].skipped);
  CHECK(log.fold_scores[0][0].note == "single-class training fold");
  REQUIRE(log.fold_scores[0][1].score.has_value());
  CHECK(*log.fold_scores[0][1].score == 0.0);  // the trap fires: fp=1, tp=0
  CHECK(log.fold_scores[0][2].skipped);
  CHECK(log.fold_scores[0][2].note == "F2 undefined on validation fold");

  REQUIRE(log.mean_score[0].has_value());
  CHECK(*log.mean_score[0] == 0.0);
  CHECK(log.best_index == 0);
}

TEST_CASE("a constant regression target skips only the affected fold") {
  CvFixture f;
  f.x = gwtest::random_matrix(90, 3, 654);
  f.y.resize(90);
  f.folds.assign(3, {});
  for (int r = 0; r < 90; ++r) {
    f.folds[static_cast<std::size_t>(r % 3)].push_back(r);
    f.y(r) = r % 3 == 0 ? 42.0 : 100.0 * f.x(r, 0) + 30.0 * f.x(r, 1);
  }

  HyperPoint h;
  h.hidden = std::vector<int>{4};
  const auto log = grid_search_cv(Algo::mlpr, {h}, f.x, f.y, f.folds, {9, 1});

  CHECK(log.fold_scores[0][0].skipped);
  CHECK(log.fold_scores[0][0].note == "constant validation target, R2 undefined");
  CHECK(log.fold_scores[0][1].score.has_value());
  CHECK(log.fold_scores[0][2].score.has_value());
  CHECK(log.best_index == 0);

  const auto model = refit_best_regressor(log, f.x, f.y, 9);
  CHECK(model.algo == Algo::mlpr);
  CHECK(model.hyper.key() == "hidden=4");
}

TEST_CASE("when every fold fails for every point the search gives up") {
  auto f = clustered_fixture(30, 3);
  f.y.setZero();  // single class everywhere
  CHECK_THROWS_WITH_AS(
      grid_search_cv(Algo::knnc, {knn_point(1)}, f.x, f.y, f.folds, {1, 1}),
      "grid_search_cv: every fold failed for every grid point", TrainError);
}

TEST_CASE("results are identical across reruns and worker counts") {
  const auto f = clustered_fixture(66, 24);
  HyperPoint t5, t9;
  t5.trees = 5;
  t9.trees = 9;
  const std::vector<HyperPoint> points{t5, t9};

  const auto a = grid_search_cv(Algo::rfc, points, f.x, f.y, f.folds, {11, 1});
  const auto b = grid_search_cv(Algo::rfc, points, f.x, f.y, f.folds, {11, 1});
  const auto c = grid_search_cv(Algo::rfc, points, f.x, f.y, f.folds, {11, 4});
  CHECK(search_log_to_json(a) == search_log_to_json(b));
  CHECK(search_log_to_json(a) == search_log_to_json(c));
}

TEST_CASE("degenerate search inputs are refused") {
  const auto f = clustered_fixture(30, 12);

  CHECK_THROWS_AS(grid_search_cv(Algo::knnc, {}, f.x, f.y, f.folds, {1, 1}), TrainError);

  const std::vector<std::vector<std::int64_t>> one_fold{{0, 1, 2, 3}};
  CHECK_THROWS_AS(grid_search_cv(Algo::knnc, {knn_point(1)}, f.x, f.y, one_fold, {1, 1}),
                  TrainError);

  auto bad = f.folds;
  bad[0].push_back(30);  // beyond the last row
  CHECK_THROWS_AS(grid_search_cv(Algo::knnc, {knn_point(1)}, f.x, f.y, bad, {1, 1}),
                  TrainError);

  GridSearchLog empty;
  std::vector<int> labels(30, 0);
  CHECK_THROWS_AS(refit_best_classifier(empty, f.x, labels, 1), TrainError);
  CHECK_THROWS_AS(refit_best_regressor(empty, f.x, f.y, 1), TrainError);
}
