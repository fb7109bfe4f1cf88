#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace gridwatch {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
};

/// pred/truth use 1 = anomalous. Sizes must match.
ConfusionCounts confusion_from(const std::vector<int>& pred,
                               const std::vector<std::uint8_t>& truth);

/// F2 = 5 TP / (5 TP + 4 FN + FP); empty when the denominator is zero
/// (no positives anywhere), never a silent 0.
std::optional<double> f2_score(const ConfusionCounts& c);

struct PrecisionRecall {
  std::optional<double> precision;  // empty when TP + FP = 0
  std::optional<double> recall;     // empty when TP + FN = 0
};

PrecisionRecall prf_metrics(const ConfusionCounts& c);

/// Coefficient of determination; empty when y_true is constant. Throws
/// EvalError on length mismatch or fewer than two points.
std::optional<double> r2_score(const std::vector<double>& y_true,
                               const std::vector<double>& y_pred);

double rmse(const std::vector<double>& y_true, const std::vector<double>& y_pred);

/// Five-number summary; quartiles use linear interpolation between order
/// statistics (the numpy default). Throws EvalError on empty input.
struct SummaryStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

SummaryStats summarize(std::vector<double> values);

}  // namespace gridwatch
