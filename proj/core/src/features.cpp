#include "gridwatch/features.hpp"

#include <algorithm>
#include <cmath>

#include "gridwatch/errors.hpp"

namespace gridwatch {

std::string to_string(ContextScope scope) {
  return scope == ContextScope::generators_only ? "generators_only" : "all_injections";
}

std::string to_string(HistoryScope scope) {
  return scope == HistoryScope::target_only ? "target_only" : "full_context";
}

std::string to_string(TaskKind task) {
  return task == TaskKind::classification ? "classification" : "regression";
}

ContextScope context_scope_from_string(const std::string& s) {
  if (s == "generators_only") return ContextScope::generators_only;
  if (s == "all_injections") return ContextScope::all_injections;
  throw ConfigError("unknown context_scope '" + s + "'");
}

HistoryScope history_scope_from_string(const std::string& s) {
  if (s == "target_only") return HistoryScope::target_only;
  if (s == "full_context") return HistoryScope::full_context;
  throw ConfigError("unknown history_scope '" + s + "'");
}

TaskKind task_from_string(const std::string& s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw ConfigError("unknown task '" + s + "'");
}

void FeatureConfig::validate() const {
  if (history_len < 0) {
    throw ConfigError("history_len must be >= 0, got " + std::to_string(history_len));
  }
  if (history_len > kHoursPerYear) {
    throw ConfigError("history_len " + std::to_string(history_len) + " exceeds one year");
  }
}

std::string FeatureConfig::key() const {
  std::string k = context_scope == ContextScope::generators_only ? "gen" : "all";
  k += "-h" + std::to_string(history_len);
  k += history_scope == HistoryScope::target_only ? "-self" : "-full";
  k += task == TaskKind::classification ? "-cls" : "-reg";
  if (!wrap_history) k += "-nowrap";
  return k;
}

std::int64_t vector_size(const FeatureConfig& config, const GridSpec& grid) {
  config.validate();
  const std::int64_t n = static_cast<std::int64_t>(grid.plant_count());
  const std::int64_t l = static_cast<std::int64_t>(grid.load_count());
  const std::int64_t h = config.history_len;
  const bool cls = config.task == TaskKind::classification;

  std::int64_t size = h;                 // target history
  size += cls ? n : n - 1;               // plants at t
  if (config.history_scope == HistoryScope::full_context) {
    size += h * (n - 1);                 // non-target plants per lag
  }
  if (config.context_scope == ContextScope::all_injections) {
    size += l;                           // loads at t
    if (config.history_scope == HistoryScope::full_context) {
      size += h * l;                     // loads per lag
    }
  }
  return size;
}

Scaler fit_scaler(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) {
    throw DataError("fit_scaler: empty matrix");
  }
  Scaler s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.sd = (centered.array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < s.sd.size(); ++j) {
    if (!(s.sd(j) > 0.0)) s.sd(j) = 0.0;
  }
  return s;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& x) {
  if (x.cols() != scaler.mean.size()) {
    throw DataError("apply_scaler: matrix has " + std::to_string(x.cols()) +
                    " columns, scaler was fitted on " + std::to_string(scaler.mean.size()));
  }
  Eigen::MatrixXd out = x.rowwise() - scaler.mean.transpose();
  for (Eigen::Index j = 0; j < scaler.sd.size(); ++j) {
    if (scaler.sd(j) > 0.0) {
      out.col(j) /= scaler.sd(j);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Eigen::VectorXd apply_scaler_row(const Scaler& scaler, const Eigen::VectorXd& x) {
  if (x.size() != scaler.mean.size()) {
    throw DataError("apply_scaler_row: width mismatch");
  }
  Eigen::VectorXd out = x - scaler.mean;
  for (Eigen::Index j = 0; j < scaler.sd.size(); ++j) {
    out(j) = scaler.sd(j) > 0.0 ? out(j) / scaler.sd(j) : 0.0;
  }
  return out;
}

namespace {

struct ColumnPlan {
  Eigen::Index target = 0;
  std::vector<Eigen::Index> plants;         // lexicographic by id, incl. target
  std::vector<Eigen::Index> other_plants;   // lexicographic by id, excl. target
  std::vector<Eigen::Index> loads;          // lexicographic by id
};

ColumnPlan make_plan(const SeriesFrame& frame, const std::string& target, const GridSpec& grid) {
  if (!grid.has_plant(target)) {
    throw DataError("feature target '" + target + "' is not a plant in grid '" + grid.name + "'");
  }
  ColumnPlan plan;
  plan.target = frame.column_index(target);

  std::vector<std::string> plant_ids;
  plant_ids.reserve(grid.plants.size());
  for (const auto& p : grid.plants) plant_ids.push_back(p.id);
  std::sort(plant_ids.begin(), plant_ids.end());
  for (const auto& id : plant_ids) {
    const auto col = frame.column_index(id);
    plan.plants.push_back(col);
    if (id != target) plan.other_plants.push_back(col);
  }

  std::vector<std::string> load_ids = grid.load_bus_ids;
  std::sort(load_ids.begin(), load_ids.end());
  for (const auto& id : load_ids) plan.loads.push_back(frame.column_index(id));
  return plan;
}

}  // namespace

DesignMatrix build_dataset_rows(const SeriesFrame& frame, const std::vector<std::uint8_t>& labels,
                                const std::string& target, const FeatureConfig& config,
                                const GridSpec& grid, const std::vector<std::int64_t>& rows,
                                const SeriesFrame* truth) {
  config.validate();
  const auto t_total = frame.rows();
  if (t_total <= 0) {
    throw DataError("build_dataset: frame has no rows");
  }
  const bool cls = config.task == TaskKind::classification;
  if (cls && static_cast<std::int64_t>(labels.size()) != t_total) {
    throw DataError("build_dataset: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(t_total) + " rows");
  }
  Eigen::Index truth_col = 0;
  if (!cls) {
    if (truth == nullptr) {
      throw DataError("build_dataset: regression needs a truth frame for targets");
    }
    if (truth->rows() != t_total) {
      throw DataError("build_dataset: truth frame row count differs from input frame");
    }
    truth_col = truth->column_index(target);
  }
  if (!config.wrap_history && t_total <= config.history_len) {
    throw DataError("build_dataset: frame shorter than history without wrapping");
  }

  const ColumnPlan plan = make_plan(frame, target, grid);
  const auto width = vector_size(config, grid);
  const auto h = static_cast<std::int64_t>(config.history_len);

  DesignMatrix out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), width);
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.row_time = rows;

  const auto at = [&](Eigen::Index col, std::int64_t t, std::int64_t lag) {
    const std::int64_t idx = ((t - lag) % t_total + t_total) % t_total;
    return frame.values(idx, col);
  };

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::int64_t t = rows[r];
    if (t < 0 || t >= t_total) {
      throw DataError("build_dataset: row index " + std::to_string(t) + " out of range");
    }
    if (!config.wrap_history && t < h) {
      throw DataError("build_dataset: row " + std::to_string(t) +
                      " has no full history and wrapping is off");
    }
    const auto row = static_cast<Eigen::Index>(r);
    Eigen::Index c = 0;
    for (std::int64_t lag = 1; lag <= h; ++lag) {
      out.x(row, c++) = at(plan.target, t, lag);
    }
    for (const auto col : plan.plants) {
      if (!cls && col == plan.target) continue;
      out.x(row, c++) = at(col, t, 0);
    }
    if (config.history_scope == HistoryScope::full_context) {
      for (std::int64_t lag = 1; lag <= h; ++lag) {
        for (const auto col : plan.other_plants) {
          out.x(row, c++) = at(col, t, lag);
        }
      }
    }
    if (config.context_scope == ContextScope::all_injections) {
      for (const auto col : plan.loads) {
        out.x(row, c++) = at(col, t, 0);
      }
      if (config.history_scope == HistoryScope::full_context) {
        for (std::int64_t lag = 1; lag <= h; ++lag) {
          for (const auto col : plan.loads) {
            out.x(row, c++) = at(col, t, lag);
          }
        }
      }
    }
    out.y(row) = cls ? static_cast<double>(labels[static_cast<std::size_t>(t)])
                     : truth->values(t, truth_col);
  }
  return out;
}

DesignMatrix build_dataset(const SeriesFrame& frame, const std::vector<std::uint8_t>& labels,
                           const std::string& target, const FeatureConfig& config,
                           const GridSpec& grid, const SeriesFrame* truth) {
  config.validate();
  std::vector<std::int64_t> rows;
  const std::int64_t first = config.wrap_history ? 0 : config.history_len;
  rows.reserve(static_cast<std::size_t>(std::max<std::int64_t>(frame.rows() - first, 0)));
  for (std::int64_t t = first; t < frame.rows(); ++t) rows.push_back(t);
  return build_dataset_rows(frame, labels, target, config, grid, rows, truth);
}

DesignMatrix standardize(const DesignMatrix& data, const std::optional<Scaler>& stats) {
  DesignMatrix out = data;
  const Scaler scaler = stats ? *stats : fit_scaler(data.x);
  out.x = apply_scaler(scaler, data.x);
  out.scaling = scaler;
  return out;
}

}  // namespace gridwatch
