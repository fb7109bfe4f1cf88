#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridwatch/grid.hpp"

namespace gridwatch {

enum class ContextScope { generators_only, all_injections };
enum class HistoryScope { target_only, full_context };
enum class TaskKind { classification, regression };

std::string to_string(ContextScope scope);
std::string to_string(HistoryScope scope);
std::string to_string(TaskKind task);
ContextScope context_scope_from_string(const std::string& s);
HistoryScope history_scope_from_string(const std::string& s);
TaskKind task_from_string(const std::string& s);

/// What goes into one detector input row. With N plants, L loads and
/// history length H the layout is, in column order:
///   1. target history, lags t-1 .. t-H (reported target output)
///   2. plant outputs at t in lexicographic id order
///      (classification keeps the target's own reading, regression drops it)
///   3. full_context only: for each lag 1..H, the non-target plants in
///      lexicographic id order
///   4. all_injections only: loads at t in lexicographic id order, then (for
///      full_context) the loads per lag in the same order
struct FeatureConfig {
  ContextScope context_scope = ContextScope::generators_only;
  int history_len = 24;
  HistoryScope history_scope = HistoryScope::target_only;
  TaskKind task = TaskKind::classification;
  bool wrap_history = true;  // false drops the first history_len rows instead

  void validate() const;
  /// Stable key used in artifact paths and reports, e.g. "gen-h24-self-cls".
  std::string key() const;
};

/// Width of the feature vector produced under `config` for a grid with
/// grid.plant_count() plants and grid.load_count() loads.
std::int64_t vector_size(const FeatureConfig& config, const GridSpec& grid);

/// Per-column affine transform fitted on some matrix: x -> (x - mean) / sd,
/// with sd the population standard deviation. Zero-variance columns map to 0.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // 0 marks a constant column
};

Scaler fit_scaler(const Eigen::MatrixXd& x);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& x);
Eigen::VectorXd apply_scaler_row(const Scaler& scaler, const Eigen::VectorXd& x);

struct DesignMatrix {
  Eigen::MatrixXd x;                        // one row per retained time step
  Eigen::VectorXd y;                        // 0/1 labels or truth output in MW
  std::vector<std::int64_t> row_time;      // frame row each matrix row came from
  std::optional<Scaler> scaling;           // set once standardize() ran
};

/// Builds rows for every usable time step ("usable" = all steps when
/// wrapping, steps >= history_len otherwise). For classification `labels`
/// supplies y; for regression the truth frame does and `labels` may be empty.
DesignMatrix build_dataset(const SeriesFrame& frame, const std::vector<std::uint8_t>& labels,
                           const std::string& target, const FeatureConfig& config,
                           const GridSpec& grid, const SeriesFrame* truth = nullptr);

/// Same, restricted to the given frame rows (used for split/test slicing).
DesignMatrix build_dataset_rows(const SeriesFrame& frame, const std::vector<std::uint8_t>& labels,
                                const std::string& target, const FeatureConfig& config,
                                const GridSpec& grid, const std::vector<std::int64_t>& rows,
                                const SeriesFrame* truth = nullptr);

/// Returns a copy with x transformed; fits a scaler on x itself unless one
/// is passed in (apply-time path for validation/test rows).
DesignMatrix standardize(const DesignMatrix& data, const std::optional<Scaler>& stats = {});

}  // namespace gridwatch
