#include "gridwatch/grid.hpp"

#include <cmath>
#include <unordered_set>

#include "gridwatch/errors.hpp"

namespace gridwatch {

std::string to_string(PlantKind kind) {
  switch (kind) {
    case PlantKind::hydro: return "hydro";
    case PlantKind::gas: return "gas";
    case PlantKind::coal: return "coal";
    case PlantKind::nuclear: return "nuclear";
  }
  return "hydro";
}

PlantKind plant_kind_from_string(const std::string& s) {
  if (s == "hydro") return PlantKind::hydro;
  if (s == "gas") return PlantKind::gas;
  if (s == "coal") return PlantKind::coal;
  if (s == "nuclear") return PlantKind::nuclear;
  throw ConfigError("unknown plant kind: " + s);
}

std::vector<std::string> GridSpec::column_ids() const {
  std::vector<std::string> ids = load_bus_ids;
  ids.reserve(load_bus_ids.size() + plants.size());
  for (const auto& p : plants) ids.push_back(p.id);
  return ids;
}

const Plant& GridSpec::plant(const std::string& id) const {
  for (const auto& p : plants) {
    if (p.id == id) return p;
  }
  throw ConfigError("grid '" + name + "' has no plant '" + id + "'");
}

bool GridSpec::has_plant(const std::string& id) const {
  for (const auto& p : plants) {
    if (p.id == id) return true;
  }
  return false;
}

std::vector<std::string> GridSpec::attackable_plant_ids() const {
  std::vector<std::string> ids;
  for (const auto& p : plants) {
    if (p.kind != PlantKind::nuclear) ids.push_back(p.id);
  }
  return ids;
}

void GridSpec::validate() const {
  if (load_bus_ids.empty()) {
    throw ConfigError("grid '" + name + "': needs at least one load bus");
  }
  if (plants.size() < 2) {
    throw ConfigError("grid '" + name + "': needs at least two plants (a target needs a nonempty context)");
  }
  if (hours_per_year != kHoursPerYear) {
    throw ConfigError("grid '" + name + "': hours_per_year must be 8736");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : load_bus_ids) {
    if (!seen.insert(id).second) {
      throw ConfigError("grid '" + name + "': duplicate id '" + id + "'");
    }
  }
  for (const auto& p : plants) {
    if (!seen.insert(p.id).second) {
      throw ConfigError("grid '" + name + "': duplicate id '" + p.id + "'");
    }
    if (!(p.rated_power > 0.0)) {
      throw ConfigError("plant '" + p.id + "': rated_power must be > 0");
    }
    if (p.annual_energy < 0.0) {
      throw ConfigError("plant '" + p.id + "': annual_energy must be >= 0");
    }
    if (p.annual_energy > p.rated_power * static_cast<double>(hours_per_year)) {
      throw ConfigError("plant '" + p.id + "': annual_energy exceeds rated_power * " +
                        std::to_string(hours_per_year));
    }
  }
}

std::int64_t SeriesFrame::column_index(const std::string& id) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == id) return static_cast<std::int64_t>(i);
  }
  throw FrameStructureError("frame has no column '" + id + "'");
}

bool SeriesFrame::has_column(const std::string& id) const {
  for (const auto& c : columns) {
    if (c == id) return true;
  }
  return false;
}

ValidationReport validate_frame(const SeriesFrame& frame, const GridSpec& grid) {
  const auto expected = grid.column_ids();
  if (frame.columns != expected) {
    // Structural mismatch: report the first offending id, do not scan values.
    for (const auto& c : frame.columns) {
      bool known = false;
      for (const auto& e : expected) {
        if (c == e) { known = true; break; }
      }
      if (!known) {
        throw FrameStructureError("frame column '" + c + "' not present in grid '" + grid.name + "'");
      }
    }
    throw FrameStructureError("frame columns do not match grid '" + grid.name +
                              "' column order (expected loads then plants, spec order)");
  }
  if (frame.rows() < 1) {
    throw FrameStructureError("frame must contain at least one row");
  }
  if (frame.values.cols() != static_cast<std::int64_t>(expected.size())) {
    throw FrameStructureError("frame value matrix width does not match column ids");
  }

  ValidationReport report;
  const std::int64_t loads = static_cast<std::int64_t>(grid.load_count());
  for (std::int64_t c = 0; c < frame.cols(); ++c) {
    const bool is_plant = c >= loads;
    const double rated = is_plant ? grid.plants[static_cast<std::size_t>(c - loads)].rated_power : 0.0;
    for (std::int64_t t = 0; t < frame.rows(); ++t) {
      const double v = frame.values(t, c);
      if (!std::isfinite(v)) {
        report.violations.push_back({frame.columns[static_cast<std::size_t>(c)], t, "non_finite", v});
        continue;
      }
      if (is_plant) {
        if (v < 0.0) {
          report.violations.push_back({frame.columns[static_cast<std::size_t>(c)], t, "below_zero", v});
        } else if (v > rated) {
          report.violations.push_back({frame.columns[static_cast<std::size_t>(c)], t, "above_rated", v});
        }
      }
    }
  }
  return report;
}

}  // namespace gridwatch
