#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gridwatch/grid.hpp"

namespace gridwatch {

/// Which plant(s) were falsified at which frame rows.
struct AttackScenario {
  std::string target_plant;
  std::vector<std::int64_t> attacked_steps;  // sorted row indices
  std::vector<std::string> concurrent_plants;
  std::map<std::string, std::vector<std::int64_t>> concurrent_steps;
  double fraction = 0.10;
  std::uint64_t seed = 0;
};

/// Attacked copy of a frame plus per-row ground-truth labels for the target.
/// `reported` differs from `truth` exactly at the attacked cells; label
/// semantics follow the target column alone, concurrent corruption never
/// changes labels.
struct LabeledDataset {
  SeriesFrame reported;
  SeriesFrame truth;
  std::vector<std::uint8_t> labels;  // one per row: 1 iff the target cell was altered
  AttackScenario scenario;
};

/// The on/off rule: report full capacity when actual output is below half
/// rated, report zero otherwise (the tie at exactly rated/2 goes to zero).
/// The result is always in {0, rated} with |result - p| >= rated/2.
double onoff_value(double p, double rated);

/// Alters round(fraction * T) uniformly sampled rows of the target column
/// via onoff_value and labels them. Everything else is untouched.
LabeledDataset inject_attacks(const SeriesFrame& truth, const GridSpec& grid,
                              const std::string& target, double fraction, std::uint64_t seed);

/// All C(n, m) unordered combinations of the given ids, each exactly once,
/// in lexicographic index order.
std::vector<std::vector<std::string>> enumerate_concurrent(
    const std::vector<std::string>& context_plants, int m);

enum class ConcurrentPolicy {
  // Corrupt the context at the target's attacked steps plus an equally sized
  // sample of regular steps, so corruption hits both classes.
  same_steps,
  // Each concurrent plant gets its own freshly sampled `fraction` of steps.
  independent,
};

std::string to_string(ConcurrentPolicy policy);
ConcurrentPolicy concurrent_policy_from_string(const std::string& s);

/// Adds on/off corruption to the listed context plants of an already
/// attacked dataset. Target labels are left untouched.
LabeledDataset apply_concurrent(const LabeledDataset& dataset, const GridSpec& grid,
                                const std::vector<std::string>& combo, ConcurrentPolicy policy,
                                std::uint64_t seed);

/// Scenario JSON for reproducibility.
std::string scenario_to_json(const AttackScenario& scenario);
AttackScenario scenario_from_json(const std::string& text);

}  // namespace gridwatch
