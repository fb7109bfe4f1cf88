#include "gridwatch/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "gridwatch/errors.hpp"
#include "gridwatch/parallel.hpp"

namespace gridwatch {

std::string to_string(ScanMode mode) {
  return mode == ScanMode::exhaustive ? "exhaustive" : "worst_case_greedy";
}

ScanMode scan_mode_from_string(const std::string& s) {
  if (s == "exhaustive") return ScanMode::exhaustive;
  if (s == "worst_case_greedy") return ScanMode::worst_case_greedy;
  throw ConfigError("unknown scan mode '" + s + "'");
}

namespace {

std::int64_t binomial(std::int64_t n, std::int64_t m) {
  if (m < 0 || m > n) return 0;
  m = std::min(m, n - m);
  std::int64_t result = 1;
  for (std::int64_t i = 1; i <= m; ++i) {
    const double projected = static_cast<double>(result) * static_cast<double>(n - m + i) /
                             static_cast<double>(i);
    if (projected > 1e17) return std::numeric_limits<std::int64_t>::max() / 2;
    result = result * (n - m + i) / i;
  }
  return result;
}

struct Probe {
  const DetectorRef& detector;
  const LabeledDataset& base;
  const GridSpec& grid;
  const FeatureConfig& config;
  const std::vector<std::int64_t>& test_rows;
  const RobustnessOptions& options;
  std::vector<std::uint8_t> test_labels;
  Eigen::Index target_col = 0;

  ComboResult evaluate(const LabeledDataset& ds, const std::vector<std::string>& combo) const {
    ComboResult out;
    out.combo = combo;
    const DesignMatrix dm = build_dataset_rows(ds.reported, ds.labels,
                                               ds.scenario.target_plant, config, grid,
                                               test_rows,
                                               config.task == TaskKind::regression
                                                   ? &ds.truth
                                                   : nullptr);
    if (detector.classifier != nullptr) {
      const auto f2 = f2_score(confusion_from(detector.classifier->predict(dm.x), test_labels));
      if (!f2) {
        throw EvalError("robustness_scan: F2 undefined on test rows");
      }
      out.f2 = *f2;
      return out;
    }
    const auto& det = *detector.residual;
    Eigen::VectorXd reported(static_cast<Eigen::Index>(test_rows.size()));
    Eigen::VectorXd truth(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      reported(static_cast<Eigen::Index>(i)) = ds.reported.values(test_rows[i], target_col);
      truth(static_cast<Eigen::Index>(i)) = ds.truth.values(test_rows[i], target_col);
    }
    const Eigen::VectorXd predicted = det.regressor.predict(dm.x);
    const auto f2 =
        f2_score(confusion_from(detect_residual_batch(det.threshold, predicted, reported),
                                test_labels));
    if (!f2) {
      throw EvalError("robustness_scan: F2 undefined on test rows");
    }
    out.f2 = *f2;
    std::int64_t exceeding = 0;
    for (Eigen::Index i = 0; i < predicted.size(); ++i) {
      const double err =
          std::abs(clip_prediction(predicted(i), det.threshold.rated_power) - truth(i));
      if (err > options.error_band_mw) ++exceeding;
    }
    out.error_rate = static_cast<double>(exceeding) / static_cast<double>(predicted.size());
    return out;
  }
};

LevelReport make_level(int m, std::vector<ComboResult> results) {
  LevelReport level;
  level.m = m;
  level.combination_count = static_cast<std::int64_t>(results.size());
  std::vector<double> f2s;
  std::vector<double> rates;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    f2s.push_back(results[i].f2);
    if (results[i].error_rate) rates.push_back(*results[i].error_rate);
    if (results[i].f2 < results[worst].f2) worst = i;
  }
  level.f2_stats = summarize(f2s);
  if (!rates.empty()) level.error_rate_stats = summarize(rates);
  level.worst = std::move(results[worst]);
  return level;
}

}  // namespace

RobustnessReport robustness_scan(const DetectorRef& detector, const LabeledDataset& dataset,
                                 const GridSpec& grid, const FeatureConfig& config,
                                 const std::vector<std::int64_t>& test_rows,
                                 const std::vector<std::string>& context_plants,
                                 const RobustnessOptions& options) {
  if ((detector.classifier == nullptr) == (detector.residual == nullptr)) {
    throw EvalError("robustness_scan: pass exactly one detector");
  }
  if (options.m_max < 0) {
    throw ConfigError("robustness_scan: m_max must be >= 0");
  }
  if (test_rows.empty()) {
    throw EvalError("robustness_scan: empty test row set");
  }
  for (const auto& id : context_plants) {
    if (id == dataset.scenario.target_plant) {
      throw ConfigError("robustness_scan: context list contains the target");
    }
  }

  Probe probe{detector, dataset, grid, config, test_rows, options, {}, 0};
  probe.target_col = dataset.reported.column_index(dataset.scenario.target_plant);
  probe.test_labels.reserve(test_rows.size());
  for (const auto row : test_rows) {
    probe.test_labels.push_back(dataset.labels[static_cast<std::size_t>(row)]);
  }

  RobustnessReport report;

  // m = 0: the uncorrupted dataset through the standard evaluation path.
  {
    const DesignMatrix dm = build_dataset_rows(
        dataset.reported, dataset.labels, dataset.scenario.target_plant, config, grid,
        test_rows, config.task == TaskKind::regression ? &dataset.truth : nullptr);
    if (detector.classifier != nullptr) {
      report.baseline = evaluate_classifier(*detector.classifier, dm.x, probe.test_labels);
    } else {
      Eigen::VectorXd reported(static_cast<Eigen::Index>(test_rows.size()));
      Eigen::VectorXd truth(static_cast<Eigen::Index>(test_rows.size()));
      for (std::size_t i = 0; i < test_rows.size(); ++i) {
        reported(static_cast<Eigen::Index>(i)) =
            dataset.reported.values(test_rows[i], probe.target_col);
        truth(static_cast<Eigen::Index>(i)) =
            dataset.truth.values(test_rows[i], probe.target_col);
      }
      report.baseline =
          evaluate_residual(*detector.residual, dm.x, reported, truth, probe.test_labels);
      report.baseline_error_rate = probe.evaluate(dataset, {}).error_rate;
    }
    report.baseline.target = dataset.scenario.target_plant;
    report.baseline.feature_key = config.key();
  }

  const auto n = static_cast<std::int64_t>(context_plants.size());
  std::vector<std::string> greedy_prefix;
  for (int m = 1; m <= options.m_max; ++m) {
    std::vector<std::vector<std::string>> combos;
    if (options.mode == ScanMode::exhaustive) {
      if (binomial(n, m) > options.max_combinations) {
        throw EvalError("robustness_scan: C(" + std::to_string(n) + ", " + std::to_string(m) +
                        ") exceeds the combination budget of " +
                        std::to_string(options.max_combinations) +
                        "; use worst_case_greedy or raise the budget");
      }
      combos = enumerate_concurrent(context_plants, m);
    } else {
      // Extend the worst combination so far by each unused plant.
      for (const auto& id : context_plants) {
        if (std::find(greedy_prefix.begin(), greedy_prefix.end(), id) != greedy_prefix.end()) {
          continue;
        }
        auto combo = greedy_prefix;
        combo.push_back(id);
        std::sort(combo.begin(), combo.end());
        combos.push_back(std::move(combo));
      }
      if (combos.empty()) {
        break;  // ran out of context plants
      }
    }

    std::vector<ComboResult> results(combos.size());
    parallel_for(combos.size(), options.workers, [&](std::size_t i) {
      const LabeledDataset corrupted =
          apply_concurrent(dataset, grid, combos[i], options.policy, options.seed);
      results[i] = probe.evaluate(corrupted, combos[i]);
    });

    LevelReport level = make_level(m, std::move(results));
    if (options.mode == ScanMode::worst_case_greedy) {
      greedy_prefix = level.worst.combo;
    }
    report.levels.push_back(std::move(level));
  }
  return report;
}

namespace {

nlohmann::json stats_to_json(const SummaryStats& s) {
  return nlohmann::json{
      {"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

}  // namespace

std::string robustness_report_to_json(const RobustnessReport& report) {
  nlohmann::json j;
  j["baseline"] = nlohmann::json::parse(eval_result_to_json(report.baseline));
  j["baseline_error_rate"] = report.baseline_error_rate
                                 ? nlohmann::json(*report.baseline_error_rate)
                                 : nlohmann::json(nullptr);
  j["levels"] = nlohmann::json::array();
  for (const auto& level : report.levels) {
    nlohmann::json lj;
    lj["m"] = level.m;
    lj["combinations"] = level.combination_count;
    lj["f2"] = stats_to_json(level.f2_stats);
    if (level.error_rate_stats) {
      lj["error_rate"] = stats_to_json(*level.error_rate_stats);
    }
    lj["worst"] = {{"combo", level.worst.combo}, {"f2", level.worst.f2}};
    if (level.worst.error_rate) {
      lj["worst"]["error_rate"] = *level.worst.error_rate;
    }
    j["levels"].push_back(lj);
  }
  return j.dump(2) + "\n";
}

}  // namespace gridwatch
