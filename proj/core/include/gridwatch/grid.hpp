#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gridwatch {

/// Hours in one data year: 364 days of 24 hours, exactly 52 weeks.
/// All seasonal arithmetic is modulo this constant.
inline constexpr std::int64_t kHoursPerYear = 8736;

enum class PlantKind { hydro, gas, coal, nuclear };

std::string to_string(PlantKind kind);
PlantKind plant_kind_from_string(const std::string& s);

struct Plant {
  std::string id;
  PlantKind kind = PlantKind::hydro;
  double rated_power = 0.0;    // MW, > 0
  double annual_energy = 0.0;  // MWh per data year
  std::string bus_id;
};

/// Static description of a grid: load buses plus plants. Buses are plain
/// identifiers; there is no electrical topology here.
struct GridSpec {
  std::string name;
  std::vector<std::string> load_bus_ids;
  std::vector<Plant> plants;
  std::int64_t hours_per_year = kHoursPerYear;

  std::size_t load_count() const { return load_bus_ids.size(); }
  std::size_t plant_count() const { return plants.size(); }

  /// Frame column order: loads first, then plants, both in spec order.
  std::vector<std::string> column_ids() const;

  const Plant& plant(const std::string& id) const;
  bool has_plant(const std::string& id) const;

  /// Plants eligible as attack targets. Nuclear plants are representable
  /// but excluded from target selection by default.
  std::vector<std::string> attackable_plant_ids() const;

  /// Throws ConfigError when invariants are violated (duplicate ids,
  /// nonpositive rated power, annual energy above rated * hours_per_year,
  /// fewer than two plants or no load bus).
  void validate() const;
};

/// Hourly matrix of active-power injections. Columns follow a GridSpec:
/// loads first (positive consumption), then plant outputs. Treated as
/// immutable once constructed.
struct SeriesFrame {
  std::int64_t start_index = 0;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // T x columns.size()

  std::int64_t rows() const { return values.rows(); }
  std::int64_t cols() const { return values.cols(); }

  /// Index of a column id; throws FrameStructureError when absent.
  std::int64_t column_index(const std::string& id) const;
  bool has_column(const std::string& id) const;
};

struct FrameViolation {
  std::string column;
  std::int64_t step = 0;  // row index within the frame
  std::string kind;       // "non_finite", "below_zero", "above_rated"
  double value = 0.0;
};

struct ValidationReport {
  std::vector<FrameViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Scans a frame against its grid. Every violated invariant is listed with
/// (column, step); the report is empty iff the frame is valid. A frame whose
/// columns do not match the grid raises FrameStructureError before any value
/// is inspected.
ValidationReport validate_frame(const SeriesFrame& frame, const GridSpec& grid);

}  // namespace gridwatch
