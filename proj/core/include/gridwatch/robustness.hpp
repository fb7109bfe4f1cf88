#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridwatch/attacks.hpp"
#include "gridwatch/detectors/model.hpp"
#include "gridwatch/eval.hpp"
#include "gridwatch/features.hpp"
#include "gridwatch/metrics.hpp"

namespace gridwatch {

enum class ScanMode { exhaustive, worst_case_greedy };

std::string to_string(ScanMode mode);
ScanMode scan_mode_from_string(const std::string& s);

struct RobustnessOptions {
  int m_max = 3;
  ConcurrentPolicy policy = ConcurrentPolicy::same_steps;
  ScanMode mode = ScanMode::exhaustive;
  std::uint64_t seed = 0;
  double error_band_mw = 50.0;           // band for the prediction-error rate
  std::int64_t max_combinations = 20000;  // exhaustive-mode budget per level
  int workers = 1;
};

/// Exactly one of the two detectors is set.
struct DetectorRef {
  const ClassifierModel* classifier = nullptr;
  const ResidualDetector* residual = nullptr;
};

struct ComboResult {
  std::vector<std::string> combo;
  double f2 = 0.0;
  std::optional<double> error_rate;  // residual detectors only
};

struct LevelReport {
  int m = 0;
  std::int64_t combination_count = 0;  // combos actually evaluated
  SummaryStats f2_stats;
  std::optional<SummaryStats> error_rate_stats;
  ComboResult worst;  // minimum F2 at this level
};

struct RobustnessReport {
  EvalResult baseline;                     // m = 0, no corruption
  std::optional<double> baseline_error_rate;
  std::vector<LevelReport> levels;
};

/// Re-evaluates the detector on the test rows while the context plants in
/// each combination are corrupted. Target labels stay fixed; only the inputs
/// move. Exhaustive mode covers every combination up to options.m_max (and
/// rejects levels above max_combinations); worst_case_greedy extends the
/// worst combination found so far by one plant per level.
RobustnessReport robustness_scan(const DetectorRef& detector, const LabeledDataset& dataset,
                                 const GridSpec& grid, const FeatureConfig& config,
                                 const std::vector<std::int64_t>& test_rows,
                                 const std::vector<std::string>& context_plants,
                                 const RobustnessOptions& options);

std::string robustness_report_to_json(const RobustnessReport& report);

}  // namespace gridwatch
