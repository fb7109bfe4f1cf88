#include "gridwatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridwatch/errors.hpp"

namespace gridwatch {

ConfusionCounts confusion_from(const std::vector<int>& pred,
                               const std::vector<std::uint8_t>& truth) {
  if (pred.size() != truth.size()) {
    throw EvalError("confusion_from: " + std::to_string(pred.size()) + " predictions vs " +
                    std::to_string(truth.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p && !t) ++c.fp;
    else if (!p && t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::optional<double> f2_score(const ConfusionCounts& c) {
  const std::int64_t denom = 5 * c.tp + 4 * c.fn + c.fp;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(5 * c.tp) / static_cast<double>(denom);
}

PrecisionRecall prf_metrics(const ConfusionCounts& c) {
  PrecisionRecall pr;
  if (c.tp + c.fp > 0) {
    pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn > 0) {
    pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  return pr;
}

std::optional<double> r2_score(const std::vector<double>& y_true,
                               const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw EvalError("r2_score: length mismatch");
  }
  if (y_true.size() < 2) {
    throw EvalError("r2_score: need at least two points");
  }
  double mean = 0.0;
  for (const double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    const double d = y_true[i] - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

double rmse(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw EvalError("rmse: length mismatch");
  }
  if (y_true.empty()) {
    throw EvalError("rmse: empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(y_true.size()));
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

SummaryStats summarize(std::vector<double> values) {
  if (values.empty()) {
    throw EvalError("summarize: empty input");
  }
  std::sort(values.begin(), values.end());
  SummaryStats s;
  s.min = values.front();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.50);
  s.q3 = quantile_sorted(values, 0.75);
  s.max = values.back();
  return s;
}

}  // namespace gridwatch
