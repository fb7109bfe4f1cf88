#include "gridwatch/eval.hpp"

#include <cmath>

#include "json.hpp"

#include "gridwatch/errors.hpp"

namespace gridwatch {

EvalResult evaluate_classifier(const ClassifierModel& model, const Eigen::MatrixXd& x_test,
                               const std::vector<std::uint8_t>& labels) {
  if (static_cast<std::size_t>(x_test.rows()) != labels.size()) {
    throw EvalError("evaluate_classifier: row/label count mismatch");
  }
  EvalResult r;
  r.algo = model.algo;
  r.hyper = model.hyper;
  r.rows = x_test.rows();
  r.train_seconds = model.info.train_seconds;
  r.seed = model.info.seed;
  r.confusion = confusion_from(model.predict(x_test), labels);
  r.f2 = f2_score(r.confusion);
  const auto pr = prf_metrics(r.confusion);
  r.precision = pr.precision;
  r.recall = pr.recall;
  return r;
}

EvalResult evaluate_residual(const ResidualDetector& detector, const Eigen::MatrixXd& x_test,
                             const Eigen::VectorXd& reported, const Eigen::VectorXd& truth,
                             const std::vector<std::uint8_t>& labels) {
  const auto n = x_test.rows();
  if (reported.size() != n || truth.size() != n ||
      static_cast<Eigen::Index>(labels.size()) != n) {
    throw EvalError("evaluate_residual: row count mismatch");
  }
  const double rated = detector.threshold.rated_power;
  if (!(rated > 0.0)) {
    throw EvalError("evaluate_residual: detector has no rated power");
  }

  EvalResult r;
  r.algo = detector.regressor.algo;
  r.hyper = detector.regressor.hyper;
  r.rows = n;
  r.train_seconds = detector.regressor.info.train_seconds;
  r.seed = detector.regressor.info.seed;
  r.threshold = detector.threshold.threshold;
  r.threshold_separating = detector.threshold.separating;

  const Eigen::VectorXd predicted = detector.regressor.predict(x_test);
  std::vector<double> y_true(static_cast<std::size_t>(n)), y_pred(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    y_true[static_cast<std::size_t>(i)] = truth(i);
    y_pred[static_cast<std::size_t>(i)] = clip_prediction(predicted(i), rated);
  }
  r.r2 = r2_score(y_true, y_pred);
  r.relative_error = rmse(y_true, y_pred) / rated;

  r.confusion = confusion_from(detect_residual_batch(detector.threshold, predicted, reported),
                               labels);
  r.f2 = f2_score(r.confusion);
  const auto pr = prf_metrics(r.confusion);
  r.precision = pr.precision;
  r.recall = pr.recall;
  return r;
}

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string eval_result_to_json(const EvalResult& result) {
  json j;
  j["target"] = result.target;
  j["feature_key"] = result.feature_key;
  j["algo"] = to_string(result.algo);
  j["hyper"] = json::object();
  if (result.hyper.k) j["hyper"]["k"] = *result.hyper.k;
  if (result.hyper.c) j["hyper"]["c"] = *result.hyper.c;
  if (result.hyper.trees) j["hyper"]["trees"] = *result.hyper.trees;
  if (result.hyper.stages) j["hyper"]["stages"] = *result.hyper.stages;
  if (result.hyper.hidden) j["hyper"]["hidden"] = *result.hyper.hidden;
  j["rows"] = result.rows;
  j["confusion"] = {{"tp", result.confusion.tp},
                    {"fp", result.confusion.fp},
                    {"fn", result.confusion.fn},
                    {"tn", result.confusion.tn}};
  j["f2"] = opt_to_json(result.f2);
  j["precision"] = opt_to_json(result.precision);
  j["recall"] = opt_to_json(result.recall);
  j["r2"] = opt_to_json(result.r2);
  j["relative_error"] = opt_to_json(result.relative_error);
  j["threshold"] = opt_to_json(result.threshold);
  j["threshold_separating"] = result.threshold_separating;
  j["seed"] = result.seed;
  j["timing"] = {{"train_seconds", result.train_seconds}};
  return j.dump(2) + "\n";
}

EvalResult eval_result_from_json(const std::string& text) {
  EvalResult r;
  try {
    const json j = json::parse(text);
    r.target = j.at("target").get<std::string>();
    r.feature_key = j.at("feature_key").get<std::string>();
    r.algo = algo_from_string(j.at("algo").get<std::string>());
    const auto& h = j.at("hyper");
    if (h.contains("k")) r.hyper.k = h.at("k").get<int>();
    if (h.contains("c")) r.hyper.c = h.at("c").get<double>();
    if (h.contains("trees")) r.hyper.trees = h.at("trees").get<int>();
    if (h.contains("stages")) r.hyper.stages = h.at("stages").get<int>();
    if (h.contains("hidden")) r.hyper.hidden = h.at("hidden").get<std::vector<int>>();
    r.rows = j.at("rows").get<std::int64_t>();
    const auto& c = j.at("confusion");
    r.confusion.tp = c.at("tp").get<std::int64_t>();
    r.confusion.fp = c.at("fp").get<std::int64_t>();
    r.confusion.fn = c.at("fn").get<std::int64_t>();
    r.confusion.tn = c.at("tn").get<std::int64_t>();
    r.f2 = opt_from_json(j.at("f2"));
    r.precision = opt_from_json(j.at("precision"));
    r.recall = opt_from_json(j.at("recall"));
    r.r2 = opt_from_json(j.at("r2"));
    r.relative_error = opt_from_json(j.at("relative_error"));
    r.threshold = opt_from_json(j.at("threshold"));
    r.threshold_separating = j.at("threshold_separating").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.train_seconds = j.at("timing").at("train_seconds").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad eval result JSON: ") + e.what());
  }
  return r;
}

}  // namespace gridwatch
