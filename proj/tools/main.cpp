#include <string>

#include <CLI11.hpp>

#include "gridwatch/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "gridwatch: benchmark harness for detecting on/off false-data injection\n"
      "in power-grid injection time series"};

  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;
  bool mixed_hashes = false;

  app.add_option("command", command, "pipeline stage to run")
      ->required()
      ->check(CLI::IsMember({"gen", "attack", "train", "eval", "robustness", "report", "all"}));
  app.add_option("--config", config_path, "run configuration JSON file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the config master seed");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads, 0 = all cores")
                          ->envname("GRIDWATCH_WORKERS");
  auto* out_opt = app.add_option("--out", out_dir, "override the output directory");
  app.add_flag("--mixed-hashes", mixed_hashes,
               "allow reading artifacts produced under a different config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad usage is a config error
  }

  gridwatch::CliOverrides overrides;
  if (seed_opt->count() > 0) overrides.seed = seed;
  if (workers_opt->count() > 0) overrides.workers = workers;
  if (out_opt->count() > 0) overrides.out = out_dir;
  overrides.allow_mixed_hashes = mixed_hashes;

  return gridwatch::run_command(command, config_path, overrides);
}
