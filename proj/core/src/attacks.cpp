#include "gridwatch/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

double onoff_value(double p, double rated) {
  if (!(rated > 0.0)) {
    throw DataError("onoff_value: rated power must be positive");
  }
  if (!std::isfinite(p) || p < 0.0 || p > rated) {
    throw DataError("onoff_value: actual output " + std::to_string(p) +
                    " outside [0, " + std::to_string(rated) + "]");
  }
  return p < rated / 2.0 ? rated : 0.0;
}

namespace {

const Plant& checked_target(const GridSpec& grid, const std::string& target) {
  if (!grid.has_plant(target)) {
    throw DataError("attack target '" + target + "' is not a plant in grid '" + grid.name + "'");
  }
  return grid.plant(target);
}

std::string combo_key(const std::vector<std::string>& combo) {
  std::string key;
  for (const auto& id : combo) {
    if (!key.empty()) key += ',';
    key += id;
  }
  return key;
}

void corrupt_column(SeriesFrame& frame, const SeriesFrame& truth, Eigen::Index col,
                    double rated, const std::vector<std::int64_t>& steps) {
  for (const auto step : steps) {
    frame.values(step, col) = onoff_value(truth.values(step, col), rated);
  }
}

}  // namespace

LabeledDataset inject_attacks(const SeriesFrame& truth, const GridSpec& grid,
                              const std::string& target, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw ConfigError("attack fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  const Plant& plant = checked_target(grid, target);
  const auto col = truth.column_index(target);
  const auto rows = truth.rows();
  if (rows <= 0) {
    throw DataError("inject_attacks: frame has no rows");
  }
  const auto count = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(rows)));
  if (count <= 0) {
    throw DataError("inject_attacks: fraction " + std::to_string(fraction) + " of " +
                    std::to_string(rows) + " rows rounds to zero attacked steps");
  }

  LabeledDataset out;
  out.truth = truth;
  out.reported = truth;
  out.labels.assign(static_cast<std::size_t>(rows), 0);
  out.scenario.target_plant = target;
  out.scenario.fraction = fraction;
  out.scenario.seed = seed;

  Rng rng(seed);
  out.scenario.attacked_steps = rng.sample_without_replacement(rows, count);
  for (const auto step : out.scenario.attacked_steps) {
    out.reported.values(step, col) = onoff_value(truth.values(step, col), plant.rated_power);
    out.labels[static_cast<std::size_t>(step)] = 1;
  }
  return out;
}

std::vector<std::vector<std::string>> enumerate_concurrent(
    const std::vector<std::string>& context_plants, int m) {
  const int n = static_cast<int>(context_plants.size());
  if (m < 1 || m > n) {
    throw ConfigError("enumerate_concurrent: m = " + std::to_string(m) +
                      " outside [1, " + std::to_string(n) + "]");
  }
  std::set<std::string> seen(context_plants.begin(), context_plants.end());
  if (static_cast<int>(seen.size()) != n) {
    throw ConfigError("enumerate_concurrent: duplicate plant id in context list");
  }

  std::vector<std::vector<std::string>> combos;
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::vector<std::string> combo;
    combo.reserve(static_cast<std::size_t>(m));
    for (const int i : idx) combo.push_back(context_plants[static_cast<std::size_t>(i)]);
    combos.push_back(std::move(combo));

    int pos = m - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - m + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < m; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return combos;
}

std::string to_string(ConcurrentPolicy policy) {
  return policy == ConcurrentPolicy::same_steps ? "same_steps" : "independent";
}

ConcurrentPolicy concurrent_policy_from_string(const std::string& s) {
  if (s == "same_steps") return ConcurrentPolicy::same_steps;
  if (s == "independent") return ConcurrentPolicy::independent;
  throw ConfigError("unknown concurrent policy '" + s + "'");
}

LabeledDataset apply_concurrent(const LabeledDataset& dataset, const GridSpec& grid,
                                const std::vector<std::string>& combo, ConcurrentPolicy policy,
                                std::uint64_t seed) {
  if (combo.empty()) {
    LabeledDataset out = dataset;
    out.scenario.concurrent_plants.clear();
    out.scenario.concurrent_steps.clear();
    return out;
  }
  std::set<std::string> seen;
  for (const auto& id : combo) {
    checked_target(grid, id);
    if (id == dataset.scenario.target_plant) {
      throw ConfigError("apply_concurrent: combination contains the target '" + id + "'");
    }
    if (!seen.insert(id).second) {
      throw ConfigError("apply_concurrent: duplicate plant '" + id + "' in combination");
    }
  }

  LabeledDataset out = dataset;
  out.scenario.concurrent_plants = combo;
  out.scenario.concurrent_steps.clear();

  const auto rows = dataset.truth.rows();
  const std::uint64_t scan_seed = derive_seed(seed, "concurrent:" + combo_key(combo));

  std::vector<std::int64_t> shared_steps;
  if (policy == ConcurrentPolicy::same_steps) {
    // The target's attacked steps plus an equal number of regular steps, so
    // context corruption lands on both label classes.
    const auto& attacked = dataset.scenario.attacked_steps;
    std::vector<std::int64_t> regular;
    regular.reserve(static_cast<std::size_t>(rows));
    for (std::int64_t t = 0; t < rows; ++t) {
      if (!dataset.labels[static_cast<std::size_t>(t)]) regular.push_back(t);
    }
    const auto want = static_cast<std::int64_t>(attacked.size());
    if (want > static_cast<std::int64_t>(regular.size())) {
      throw DataError("apply_concurrent: not enough regular steps to match " +
                      std::to_string(want) + " attacked steps");
    }
    Rng rng(derive_seed(scan_seed, "matched"));
    const auto picks =
        rng.sample_without_replacement(static_cast<std::int64_t>(regular.size()), want);
    shared_steps = attacked;
    for (const auto p : picks) shared_steps.push_back(regular[static_cast<std::size_t>(p)]);
    std::sort(shared_steps.begin(), shared_steps.end());
  }

  for (const auto& id : combo) {
    const Plant& plant = grid.plant(id);
    const auto col = dataset.truth.column_index(id);
    std::vector<std::int64_t> steps;
    if (policy == ConcurrentPolicy::same_steps) {
      steps = shared_steps;
    } else {
      const auto count =
          static_cast<std::int64_t>(std::llround(dataset.scenario.fraction * static_cast<double>(rows)));
      Rng rng(derive_seed(scan_seed, id));
      steps = rng.sample_without_replacement(rows, count);
    }
    corrupt_column(out.reported, dataset.truth, col, plant.rated_power, steps);
    out.scenario.concurrent_steps[id] = std::move(steps);
  }
  return out;
}

std::string scenario_to_json(const AttackScenario& scenario) {
  nlohmann::json j;
  j["target_plant"] = scenario.target_plant;
  j["fraction"] = scenario.fraction;
  j["seed"] = scenario.seed;
  j["attacked_steps"] = scenario.attacked_steps;
  j["concurrent_plants"] = scenario.concurrent_plants;
  j["concurrent_steps"] = scenario.concurrent_steps;
  return j.dump(2) + "\n";
}

AttackScenario scenario_from_json(const std::string& text) {
  AttackScenario s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.target_plant = j.at("target_plant").get<std::string>();
    s.fraction = j.at("fraction").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.attacked_steps = j.at("attacked_steps").get<std::vector<std::int64_t>>();
    s.concurrent_plants = j.at("concurrent_plants").get<std::vector<std::string>>();
    s.concurrent_steps =
        j.at("concurrent_steps").get<std::map<std::string, std::vector<std::int64_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad attack scenario JSON: ") + e.what());
  }
  return s;
}

}  // namespace gridwatch
