#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridwatch/datagen.hpp"
#include "gridwatch/dataio.hpp"
#include "gridwatch/detectors/model.hpp"
#include "gridwatch/features.hpp"
#include "gridwatch/grid.hpp"
#include "gridwatch/robustness.hpp"

namespace gridwatch {

struct RobustnessConfig {
  bool enabled = false;
  Algo algo = Algo::mlpr;
  std::string feature_key;            // empty: first config matching the algo's task
  int m_max = 1;
  ConcurrentPolicy policy = ConcurrentPolicy::same_steps;
  ScanMode mode = ScanMode::exhaustive;
  double error_band_mw = 50.0;
  std::int64_t max_combinations = 20000;
  std::vector<std::string> context;   // empty: every attackable plant but the target
};

/// A fully resolved run description: the parsed config file with CLI
/// overrides applied, paths made absolute, hyper grids defaulted, and the
/// provenance hash (config minus out/workers) computed.
struct RunConfig {
  GridSpec grid;

  bool generate = true;
  int years = 2;
  FrameEncoding encoding = FrameEncoding::binary_f64_le_colmajor;
  std::vector<LoadProfileParams> loads;  // one entry per load column
  DispatchParams dispatch;
  std::string import_path;
  std::map<std::string, std::string> import_mapping;

  std::vector<std::string> targets;
  double attack_fraction = 0.10;

  std::vector<FeatureConfig> features;
  std::vector<Algo> algos;
  std::map<Algo, std::vector<HyperPoint>> hyper;  // resolved per algo in use

  RobustnessConfig robustness;

  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";
  bool allow_mixed_hashes = false;
  std::string config_hash;  // 16 hex digits over the canonicalized config
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool allow_mixed_hashes = false;
};

RunConfig load_run_config(const std::string& config_path, const CliOverrides& overrides);

/// Executes one subcommand (gen, attack, train, eval, robustness, report,
/// all). Returns the process exit code: 0 success, 1 config error, 2 data
/// error, 3 training failure, 4 evaluation failure.
int run_command(const std::string& command, const std::string& config_path,
                const CliOverrides& overrides);

}  // namespace gridwatch
