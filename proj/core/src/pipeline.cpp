#include "gridwatch/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gridwatch/attacks.hpp"
#include "gridwatch/errors.hpp"
#include "gridwatch/eval.hpp"
#include "gridwatch/metrics.hpp"
#include "gridwatch/rng.hpp"
#include "gridwatch/search.hpp"
#include "gridwatch/split.hpp"

namespace gridwatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void progress(const std::string& line) {
  std::fputs(("[gridwatch] " + line + "\n").c_str(), stderr);
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

json parse_config_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

json parse_artifact_json(const fs::path& path) {
  if (!fs::exists(path)) {
    throw DataError("missing artifact " + path.string() + " (run the producing stage first)");
  }
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError("artifact " + path.string() + " is not valid JSON: " + e.what());
  }
}

/// Rejects unknown keys so config typos fail loudly instead of being ignored.
void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_field_or(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get_field<T>(obj, key, where);
}

LoadProfileParams parse_load_params(const json& obj, const LoadProfileParams& base,
                                    const std::string& where) {
  check_keys(obj, {"base_mw", "daily_amp", "weekly_amp", "seasonal_amp", "noise_sigma"}, where);
  LoadProfileParams p = base;
  p.base_mw = get_field_or(obj, "base_mw", where, p.base_mw);
  p.daily_amp = get_field_or(obj, "daily_amp", where, p.daily_amp);
  p.weekly_amp = get_field_or(obj, "weekly_amp", where, p.weekly_amp);
  p.seasonal_amp = get_field_or(obj, "seasonal_amp", where, p.seasonal_amp);
  p.noise_sigma = get_field_or(obj, "noise_sigma", where, p.noise_sigma);
  return p;
}

DispatchParams parse_dispatch(const json& obj) {
  const std::string where = "data.dispatch";
  check_keys(obj,
             {"export_fraction", "export_sigma", "smoothing_hours", "dispersion", "jitter_rho",
              "merit_order"},
             where);
  DispatchParams p;
  p.export_fraction = get_field_or(obj, "export_fraction", where, p.export_fraction);
  p.export_sigma = get_field_or(obj, "export_sigma", where, p.export_sigma);
  p.smoothing_hours = get_field_or(obj, "smoothing_hours", where, p.smoothing_hours);
  p.dispersion = get_field_or(obj, "dispersion", where, p.dispersion);
  p.jitter_rho = get_field_or(obj, "jitter_rho", where, p.jitter_rho);
  if (obj.contains("merit_order")) {
    const auto& mo = obj.at("merit_order");
    if (!mo.is_object()) throw ConfigError(where + ".merit_order must be an object");
    for (auto it = mo.begin(); it != mo.end(); ++it) {
      PlantKind kind;
      try {
        kind = plant_kind_from_string(it.key());
      } catch (const std::exception& e) {
        throw ConfigError(where + ".merit_order: " + e.what());
      }
      p.merit_order[kind] = get_field<int>(mo, it.key(), where + ".merit_order");
    }
  }
  return p;
}

FeatureConfig parse_feature(const json& obj, std::size_t index) {
  const std::string where = "features[" + std::to_string(index) + "]";
  check_keys(obj, {"context_scope", "history_len", "history_scope", "task", "wrap_history"}, where);
  FeatureConfig fc;
  try {
    fc.context_scope = context_scope_from_string(get_field<std::string>(obj, "context_scope", where));
    fc.history_len = get_field<int>(obj, "history_len", where);
    fc.history_scope = history_scope_from_string(get_field<std::string>(obj, "history_scope", where));
    fc.task = task_from_string(get_field<std::string>(obj, "task", where));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  fc.wrap_history = get_field_or(obj, "wrap_history", where, true);
  try {
    fc.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return fc;
}

std::vector<HyperPoint> parse_hyper_points(Algo algo, const json& obj) {
  const std::string where = "hyper." + to_string(algo);
  std::vector<HyperPoint> points;
  switch (algo) {
    case Algo::knnc: {
      check_keys(obj, {"k"}, where);
      for (int k : get_field<std::vector<int>>(obj, "k", where)) {
        HyperPoint p;
        p.k = k;
        points.push_back(p);
      }
      break;
    }
    case Algo::svc: {
      check_keys(obj, {"c"}, where);
      for (double c : get_field<std::vector<double>>(obj, "c", where)) {
        HyperPoint p;
        p.c = c;
        points.push_back(p);
      }
      break;
    }
    case Algo::rfc: {
      check_keys(obj, {"trees"}, where);
      for (int t : get_field<std::vector<int>>(obj, "trees", where)) {
        HyperPoint p;
        p.trees = t;
        points.push_back(p);
      }
      break;
    }
    case Algo::gbc: {
      check_keys(obj, {"stages"}, where);
      for (int s : get_field<std::vector<int>>(obj, "stages", where)) {
        HyperPoint p;
        p.stages = s;
        points.push_back(p);
      }
      break;
    }
    case Algo::mlpc:
    case Algo::mlpr: {
      check_keys(obj, {"hidden"}, where);
      for (const auto& widths : get_field<std::vector<std::vector<int>>>(obj, "hidden", where)) {
        HyperPoint p;
        p.hidden = widths;
        points.push_back(p);
      }
      break;
    }
    case Algo::nbc:
      throw ConfigError(where + ": nbc has no hyperparameters to override");
  }
  if (points.empty()) throw ConfigError(where + ": empty hyperparameter list");
  return points;
}

/// Everything the stages need to locate artifacts under the output root.
struct OutPaths {
  fs::path root;
  fs::path manifest;
  fs::path grid_json;
  fs::path frames_dir;
  fs::path attacks_dir;
  fs::path models_dir;
  fs::path results_dir;
  fs::path report_dir;

  explicit OutPaths(const RunConfig& cfg)
      : root(cfg.out_dir),
        manifest(root / "manifest.json"),
        grid_json(root / "grid.json"),
        frames_dir(root / "frames"),
        attacks_dir(root / "attacks"),
        models_dir(root / "models"),
        results_dir(root / "results"),
        report_dir(root / "report") {}

  fs::path attack_dir(const std::string& target) const { return attacks_dir / target; }
  fs::path model_dir(const std::string& target, const std::string& feature_key) const {
    return models_dir / target / feature_key;
  }
  fs::path run_report() const { return results_dir / "run.json"; }
  fs::path robustness_report() const { return results_dir / "robustness.json"; }
};

/// Where write_frame will actually put the payload for this encoding.
fs::path frame_target(const fs::path& dir, const std::string& name, FrameEncoding encoding) {
  return encoding == FrameEncoding::csv ? dir / (name + ".csv") : dir / name;
}

/// Finds a previously written frame regardless of encoding.
fs::path frame_source(const fs::path& dir, const std::string& name) {
  const auto bin = dir / (name + ".gwf");
  if (fs::exists(bin)) return bin;
  const auto csv = dir / (name + ".csv");
  if (fs::exists(csv)) return csv;
  throw DataError("missing frame " + (dir / name).string() +
                  " (run the producing stage first)");
}

std::map<std::string, std::string> provenance_of(const RunConfig& cfg) {
  return {{"config_hash", cfg.config_hash}, {"seed", std::to_string(cfg.seed)}};
}

/// Binary frames carry the producing config's hash in their header sidecar;
/// refuse to mix artifacts from different configs unless explicitly allowed.
void check_frame_provenance(const fs::path& payload, const RunConfig& cfg) {
  const fs::path header = fs::path(payload.string() + ".json");
  if (!fs::exists(header)) return;  // CSV frames have no header to check
  const json h = parse_artifact_json(header);
  if (!h.contains("provenance")) return;
  const auto hash = h.at("provenance").value("config_hash", "");
  if (!hash.empty() && hash != cfg.config_hash && !cfg.allow_mixed_hashes) {
    throw DataError("frame " + payload.string() + " was produced under config hash " + hash +
                    ", current config hashes to " + cfg.config_hash +
                    " (pass --mixed-hashes to override)");
  }
}

void check_artifact_hash(const json& doc, const fs::path& path, const RunConfig& cfg) {
  const auto hash = doc.value("config_hash", "");
  if (!hash.empty() && hash != cfg.config_hash && !cfg.allow_mixed_hashes) {
    throw DataError("artifact " + path.string() + " was produced under config hash " + hash +
                    ", current config hashes to " + cfg.config_hash +
                    " (pass --mixed-hashes to override)");
  }
}

/// Creates or verifies out/manifest.json before a stage writes anything.
void ensure_manifest(const RunConfig& cfg, const OutPaths& paths) {
  fs::create_directories(paths.root);
  if (fs::exists(paths.manifest)) {
    const json doc = parse_artifact_json(paths.manifest);
    check_artifact_hash(doc, paths.manifest, cfg);
  }
  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "run_manifest";
  doc["config_hash"] = cfg.config_hash;
  doc["seed"] = cfg.seed;
  doc["grid_name"] = cfg.grid.name;
  atomic_write_text(paths.manifest, doc.dump(2) + "\n");
}

/// Stages write into `<dir>.tmp` and are promoted wholesale, so a failed
/// stage never leaves a half-written directory behind.
fs::path staging_dir(const fs::path& final_dir) {
  fs::path staged = final_dir;
  staged += ".tmp";
  std::error_code ec;
  fs::remove_all(staged, ec);
  fs::create_directories(staged);
  return staged;
}

void promote_dir(const fs::path& staged, const fs::path& final_dir) {
  std::error_code ec;
  fs::remove_all(final_dir, ec);
  fs::rename(staged, final_dir, ec);
  if (ec) {
    throw DataError("cannot promote " + staged.string() + " to " + final_dir.string() + ": " +
                    ec.message());
  }
}

std::string with_config_hash(const std::string& text, const RunConfig& cfg) {
  json doc = json::parse(text);
  doc["config_hash"] = cfg.config_hash;
  return doc.dump(2) + "\n";
}

/// Row indices a feature config can actually produce vectors for.
std::vector<std::int64_t> usable_rows(const std::vector<std::int64_t>& rows,
                                      const FeatureConfig& fc) {
  if (fc.wrap_history) return rows;
  std::vector<std::int64_t> out;
  out.reserve(rows.size());
  for (const auto r : rows) {
    if (r >= fc.history_len) out.push_back(r);
  }
  return out;
}

std::vector<std::uint8_t> gather_labels(const std::vector<std::uint8_t>& labels,
                                        const std::vector<std::int64_t>& rows) {
  std::vector<std::uint8_t> out;
  out.reserve(rows.size());
  for (const auto r : rows) out.push_back(labels.at(static_cast<std::size_t>(r)));
  return out;
}

Eigen::VectorXd gather_column(const SeriesFrame& frame, std::int64_t col,
                              const std::vector<std::int64_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = frame.values(rows[i], col);
  }
  return out;
}

std::vector<Algo> algos_for(const RunConfig& cfg, const FeatureConfig& fc) {
  std::vector<Algo> out;
  for (const auto algo : cfg.algos) {
    const bool wants_regression = algo_is_regressor(algo);
    if (wants_regression == (fc.task == TaskKind::regression)) out.push_back(algo);
  }
  return out;
}

struct TargetArtifacts {
  SeriesFrame reported;
  LabelSeries labels;
  AttackScenario scenario;
};

TargetArtifacts load_target_artifacts(const OutPaths& paths, const RunConfig& cfg,
                                      const std::string& target, std::int64_t expected_rows) {
  const fs::path dir = paths.attack_dir(target);
  TargetArtifacts out;
  const auto frame_path = frame_source(dir, "reported");
  check_frame_provenance(frame_path, cfg);
  out.reported = read_frame(frame_path);
  out.labels = read_labels(dir / "labels.csv");
  const json sj = parse_artifact_json(dir / "scenario.json");
  check_artifact_hash(sj, dir / "scenario.json", cfg);
  out.scenario = scenario_from_json(sj.dump());
  if (out.reported.rows() != expected_rows) {
    throw DataError("reported frame for " + target + " has " +
                    std::to_string(out.reported.rows()) + " rows, expected " +
                    std::to_string(expected_rows));
  }
  if (static_cast<std::int64_t>(out.labels.labels.size()) != expected_rows) {
    throw DataError("labels for " + target + " have " + std::to_string(out.labels.labels.size()) +
                    " rows, expected " + std::to_string(expected_rows));
  }
  return out;
}

SeriesFrame load_truth(const OutPaths& paths, const RunConfig& cfg) {
  const auto path = frame_source(paths.frames_dir, "truth");
  check_frame_provenance(path, cfg);
  return read_frame(path);
}

std::string cell_key(const std::string& target, const FeatureConfig& fc, Algo algo) {
  return target + ":" + fc.key() + ":" + to_string(algo);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void stage_gen(const RunConfig& cfg) {
  const OutPaths paths(cfg);
  ensure_manifest(cfg, paths);

  SeriesFrame truth;
  if (cfg.generate) {
    auto load_params = cfg.loads;
    for (auto& p : load_params) p.seed = derive_seed(cfg.seed, "loads");
    const SeriesFrame loads = gen_loads(cfg.grid, cfg.years, load_params);
    DispatchParams dispatch = cfg.dispatch;
    dispatch.seed = derive_seed(cfg.seed, "dispatch");
    const DispatchResult result = dispatch_generation(cfg.grid, loads, dispatch);
    truth = combine_frames(cfg.grid, loads, result.generation);
  } else {
    truth = import_external(cfg.import_path, cfg.import_mapping, cfg.grid);
  }

  const auto report = validate_frame(truth, cfg.grid);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw DataError("generated frame violates grid limits: column " + v.column + " step " +
                    std::to_string(v.step) + " " + v.kind + " (value " + std::to_string(v.value) +
                    "), " + std::to_string(report.violations.size()) + " violation(s) total");
  }

  const fs::path staged = staging_dir(paths.frames_dir);
  write_frame(truth, frame_target(staged, "truth", cfg.encoding), cfg.encoding, cfg.grid.name,
              provenance_of(cfg));
  promote_dir(staged, paths.frames_dir);
  write_grid(cfg.grid, paths.grid_json);
  progress("gen: wrote " + std::to_string(truth.rows()) + " hours x " +
           std::to_string(truth.cols()) + " columns");
}

void stage_attack(const RunConfig& cfg) {
  const OutPaths paths(cfg);
  ensure_manifest(cfg, paths);
  const SeriesFrame truth = load_truth(paths, cfg);

  const fs::path staged = staging_dir(paths.attacks_dir);
  for (const auto& target : cfg.targets) {
    const auto dataset = inject_attacks(truth, cfg.grid, target, cfg.attack_fraction,
                                        derive_seed(cfg.seed, "attack:" + target));
    const fs::path dir = staged / target;
    fs::create_directories(dir);
    write_frame(dataset.reported, frame_target(dir, "reported", cfg.encoding), cfg.encoding,
                cfg.grid.name, provenance_of(cfg));
    LabelSeries labels;
    labels.plant_id = target;
    labels.start_index = truth.start_index;
    labels.labels = dataset.labels;
    write_labels(labels, dir / "labels.csv");
    atomic_write_text(dir / "scenario.json",
                      with_config_hash(scenario_to_json(dataset.scenario), cfg));
    progress("attack: " + target + " corrupted " +
             std::to_string(dataset.scenario.attacked_steps.size()) + " of " +
             std::to_string(truth.rows()) + " rows");
  }
  promote_dir(staged, paths.attacks_dir);
}

void stage_train(const RunConfig& cfg) {
  const OutPaths paths(cfg);
  ensure_manifest(cfg, paths);
  const SeriesFrame truth = load_truth(paths, cfg);
  const SplitPlan split = make_split(truth.rows(), derive_seed(cfg.seed, "split"));

  const fs::path staged = staging_dir(paths.models_dir);
  for (const auto& target : cfg.targets) {
    const auto artifacts = load_target_artifacts(paths, cfg, target, truth.rows());
    const double rated = cfg.grid.plant(target).rated_power;
    const auto target_col = truth.column_index(target);

    for (const auto& fc : cfg.features) {
      const auto algos = algos_for(cfg, fc);
      if (algos.empty()) continue;
      const fs::path dir = staged / target / fc.key();
      fs::create_directories(dir);

      const auto cv_rows = usable_rows(split.cv_rows(), fc);
      std::unordered_map<std::int64_t, std::int64_t> local;
      local.reserve(cv_rows.size());
      for (std::size_t i = 0; i < cv_rows.size(); ++i) {
        local[cv_rows[i]] = static_cast<std::int64_t>(i);
      }
      std::vector<std::vector<std::int64_t>> folds;
      folds.reserve(split.folds.size());
      for (const auto& fold : split.folds) {
        std::vector<std::int64_t> f;
        f.reserve(fold.size());
        for (const auto r : fold) {
          const auto it = local.find(r);
          if (it != local.end()) f.push_back(it->second);
        }
        folds.push_back(std::move(f));
      }

      for (const auto algo : algos) {
        const auto& points = cfg.hyper.at(algo);
        CvOptions cv_opts;
        cv_opts.seed = derive_seed(cfg.seed, "cv:" + cell_key(target, fc, algo));
        cv_opts.workers = cfg.workers;
        const auto fit_seed = derive_seed(cfg.seed, "fit:" + cell_key(target, fc, algo));
        const auto name = to_string(algo);

        if (algo_is_regressor(algo)) {
          // The regressor learns normal behaviour from clean data, so its
          // training features come from the truth frame; only the threshold
          // ever sees attacked readings.
          const auto cv_data =
              build_dataset_rows(truth, {}, target, fc, cfg.grid, cv_rows, &truth);
          const auto log = grid_search_cv(algo, points, cv_data.x, cv_data.y, folds, cv_opts);
          const auto regressor = refit_best_regressor(log, cv_data.x, cv_data.y, fit_seed);

          const auto holdout = usable_rows(split.holdout_rows, fc);
          const auto holdout_data =
              build_dataset_rows(artifacts.reported, {}, target, fc, cfg.grid, holdout, &truth);
          const Eigen::VectorXd predicted = regressor.predict(holdout_data.x);
          const Eigen::VectorXd seen = gather_column(artifacts.reported, target_col, holdout);
          const auto holdout_labels = gather_labels(artifacts.labels.labels, holdout);
          ResidualDetector detector;
          detector.regressor = regressor;
          detector.threshold = fit_threshold(predicted, seen, holdout_labels, rated);

          atomic_write_text(dir / (name + ".json"),
                            with_config_hash(residual_detector_to_json(detector), cfg));
          atomic_write_text(dir / (name + ".cv.json"),
                            with_config_hash(search_log_to_json(log), cfg));
        } else {
          const auto cv_data = build_dataset_rows(artifacts.reported, artifacts.labels.labels,
                                                  target, fc, cfg.grid, cv_rows);
          const auto log = grid_search_cv(algo, points, cv_data.x, cv_data.y, folds, cv_opts);

          const auto train_rows = usable_rows(split.train_rows(), fc);
          const auto train_data = build_dataset_rows(artifacts.reported, artifacts.labels.labels,
                                                     target, fc, cfg.grid, train_rows);
          std::vector<int> y(static_cast<std::size_t>(train_data.y.size()));
          for (Eigen::Index i = 0; i < train_data.y.size(); ++i) {
            y[static_cast<std::size_t>(i)] = train_data.y(i) > 0.5 ? 1 : 0;
          }
          const auto model = refit_best_classifier(log, train_data.x, y, fit_seed);

          atomic_write_text(dir / (name + ".json"),
                            with_config_hash(classifier_to_json(model), cfg));
          atomic_write_text(dir / (name + ".cv.json"),
                            with_config_hash(search_log_to_json(log), cfg));
        }
        progress("train: " + cell_key(target, fc, algo) + " done");
      }
    }
  }
  promote_dir(staged, paths.models_dir);
}

void stage_eval(const RunConfig& cfg) {
  const OutPaths paths(cfg);
  ensure_manifest(cfg, paths);
  const SeriesFrame truth = load_truth(paths, cfg);
  const SplitPlan split = make_split(truth.rows(), derive_seed(cfg.seed, "split"));

  json results = json::array();
  json scenarios = json::object();

  for (const auto& target : cfg.targets) {
    const auto artifacts = load_target_artifacts(paths, cfg, target, truth.rows());
    const auto target_col = truth.column_index(target);
    scenarios[target] = {{"attacked_rows", artifacts.scenario.attacked_steps.size()},
                         {"fraction", artifacts.scenario.fraction},
                         {"seed", artifacts.scenario.seed}};

    for (const auto& fc : cfg.features) {
      const auto algos = algos_for(cfg, fc);
      if (algos.empty()) continue;
      const auto test_rows = usable_rows(split.test_rows, fc);
      const auto test_labels = gather_labels(artifacts.labels.labels, test_rows);

      for (const auto algo : algos) {
        const fs::path model_path =
            paths.model_dir(target, fc.key()) / (to_string(algo) + ".json");
        if (!fs::exists(model_path)) {
          throw DataError("missing model " + model_path.string() +
                          " (run the train stage first)");
        }
        const json model_doc = parse_artifact_json(model_path);
        check_artifact_hash(model_doc, model_path, cfg);

        EvalResult result;
        if (algo_is_regressor(algo)) {
          const auto detector = residual_detector_from_json(model_doc.dump());
          const auto test_data = build_dataset_rows(artifacts.reported, {}, target, fc, cfg.grid,
                                                    test_rows, &truth);
          const Eigen::VectorXd seen = gather_column(artifacts.reported, target_col, test_rows);
          const Eigen::VectorXd actual = gather_column(truth, target_col, test_rows);
          result = evaluate_residual(detector, test_data.x, seen, actual, test_labels);
        } else {
          const auto model = classifier_from_json(model_doc.dump());
          const auto test_data = build_dataset_rows(artifacts.reported, artifacts.labels.labels,
                                                    target, fc, cfg.grid, test_rows);
          result = evaluate_classifier(model, test_data.x, test_labels);
        }
        result.target = target;
        result.feature_key = fc.key();
        results.push_back(json::parse(eval_result_to_json(result)));
        progress("eval: " + cell_key(target, fc, algo) + (result.f2 ? " F2=" + std::to_string(*result.f2) : " F2 undefined"));
      }
    }
  }

  // Distributions across targets, one entry per (feature config, algorithm).
  std::map<std::pair<std::string, std::string>, std::vector<double>> f2_groups;
  std::map<std::pair<std::string, std::string>, std::vector<double>> err_groups;
  for (const auto& r : results) {
    const auto key = std::make_pair(r.at("feature_key").get<std::string>(),
                                    r.at("algo").get<std::string>());
    if (!r.at("f2").is_null()) f2_groups[key].push_back(r.at("f2").get<double>());
    if (!r.at("relative_error").is_null()) {
      err_groups[key].push_back(r.at("relative_error").get<double>());
    }
  }
  auto group_json = [](const std::map<std::pair<std::string, std::string>,
                                      std::vector<double>>& groups) {
    json arr = json::array();
    for (const auto& [key, values] : groups) {
      const auto stats = summarize(values);
      arr.push_back({{"feature_key", key.first},
                     {"algo", key.second},
                     {"count", values.size()},
                     {"min", stats.min},
                     {"q1", stats.q1},
                     {"median", stats.median},
                     {"q3", stats.q3},
                     {"max", stats.max}});
    }
    return arr;
  };

  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "run_report";
  doc["config_hash"] = cfg.config_hash;
  doc["seed"] = cfg.seed;
  doc["grid"] = {{"name", cfg.grid.name},
                 {"plant_count", cfg.grid.plant_count()},
                 {"load_count", cfg.grid.load_count()}};
  doc["scenario"] = {{"fraction", cfg.attack_fraction}, {"targets", scenarios}};
  doc["split"] = {{"rows", truth.rows()},
                  {"test", split.test_rows.size()},
                  {"holdout", split.holdout_rows.size()},
                  {"cv", split.cv_rows().size()}};
  doc["results"] = results;
  doc["distributions"] = {{"f2", group_json(f2_groups)},
                          {"relative_error", group_json(err_groups)}};

  fs::create_directories(paths.results_dir);
  atomic_write_text(paths.run_report(), doc.dump(2) + "\n");
  progress("eval: wrote " + paths.run_report().string());
}

void stage_robustness(const RunConfig& cfg) {
  const OutPaths paths(cfg);
  ensure_manifest(cfg, paths);
  const auto& rc = cfg.robustness;

  // Resolve the feature config the scanned detector was trained under.
  const FeatureConfig* fc = nullptr;
  for (const auto& candidate : cfg.features) {
    if (!rc.feature_key.empty()) {
      if (candidate.key() == rc.feature_key) {
        fc = &candidate;
        break;
      }
    } else if ((candidate.task == TaskKind::regression) == algo_is_regressor(rc.algo)) {
      fc = &candidate;
      break;
    }
  }
  if (fc == nullptr) {
    throw ConfigError("robustness: no feature config matches " +
                      (rc.feature_key.empty() ? "algorithm " + to_string(rc.algo)
                                              : "key " + rc.feature_key));
  }

  const SeriesFrame truth = load_truth(paths, cfg);
  const SplitPlan split = make_split(truth.rows(), derive_seed(cfg.seed, "split"));
  const auto test_rows = usable_rows(split.test_rows, *fc);

  json targets_doc = json::object();
  for (const auto& target : cfg.targets) {
    const auto artifacts = load_target_artifacts(paths, cfg, target, truth.rows());

    std::vector<std::string> context;
    if (rc.context.empty()) {
      for (const auto& id : cfg.grid.attackable_plant_ids()) {
        if (id != target) context.push_back(id);
      }
    } else {
      for (const auto& id : rc.context) {
        if (id != target) context.push_back(id);
      }
    }

    const fs::path model_path = paths.model_dir(target, fc->key()) / (to_string(rc.algo) + ".json");
    if (!fs::exists(model_path)) {
      throw DataError("missing model " + model_path.string() + " (run the train stage first)");
    }
    const json model_doc = parse_artifact_json(model_path);
    check_artifact_hash(model_doc, model_path, cfg);

    LabeledDataset dataset;
    dataset.reported = artifacts.reported;
    dataset.truth = truth;
    dataset.labels = artifacts.labels.labels;
    dataset.scenario = artifacts.scenario;

    RobustnessOptions options;
    options.m_max = rc.m_max;
    options.policy = rc.policy;
    options.mode = rc.mode;
    options.seed = derive_seed(cfg.seed, "robustness:" + target);
    options.error_band_mw = rc.error_band_mw;
    options.max_combinations = rc.max_combinations;
    options.workers = cfg.workers;

    RobustnessReport report;
    if (algo_is_regressor(rc.algo)) {
      const auto detector = residual_detector_from_json(model_doc.dump());
      DetectorRef ref;
      ref.residual = &detector;
      report = robustness_scan(ref, dataset, cfg.grid, *fc, test_rows, context, options);
    } else {
      const auto model = classifier_from_json(model_doc.dump());
      DetectorRef ref;
      ref.classifier = &model;
      report = robustness_scan(ref, dataset, cfg.grid, *fc, test_rows, context, options);
    }
    targets_doc[target] = json::parse(robustness_report_to_json(report));
    progress("robustness: " + target + " scanned " + std::to_string(context.size()) +
             " context plants up to m=" + std::to_string(rc.m_max));
  }

  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "robustness_report";
  doc["config_hash"] = cfg.config_hash;
  doc["seed"] = cfg.seed;
  doc["algo"] = to_string(rc.algo);
  doc["feature_key"] = fc->key();
  doc["mode"] = to_string(rc.mode);
  doc["policy"] = to_string(rc.policy);
  doc["m_max"] = rc.m_max;
  doc["error_band_mw"] = rc.error_band_mw;
  doc["targets"] = targets_doc;

  fs::create_directories(paths.results_dir);
  atomic_write_text(paths.robustness_report(), doc.dump(2) + "\n");
  progress("robustness: wrote " + paths.robustness_report().string());
}

std::string csv_number(const json& value) {
  if (value.is_null()) return "";
  return value.dump();
}

void stage_report(const RunConfig& cfg) {
  const OutPaths paths(cfg);
  ensure_manifest(cfg, paths);

  const json run = parse_artifact_json(paths.run_report());
  check_artifact_hash(run, paths.run_report(), cfg);
  json robustness;
  if (fs::exists(paths.robustness_report())) {
    robustness = parse_artifact_json(paths.robustness_report());
    check_artifact_hash(robustness, paths.robustness_report(), cfg);
  }

  const fs::path staged = staging_dir(paths.report_dir);

  // One row per evaluated (target, feature config, algorithm) cell.
  {
    std::string out =
        "target,feature_key,algo,hyper,rows,tp,fp,fn,tn,f2,precision,recall,"
        "r2,relative_error,threshold,threshold_separating\n";
    for (const auto& r : run.at("results")) {
      HyperPoint hp;
      const auto& h = r.at("hyper");
      if (h.contains("k")) hp.k = h.at("k").get<int>();
      if (h.contains("c")) hp.c = h.at("c").get<double>();
      if (h.contains("trees")) hp.trees = h.at("trees").get<int>();
      if (h.contains("stages")) hp.stages = h.at("stages").get<int>();
      if (h.contains("hidden")) hp.hidden = h.at("hidden").get<std::vector<int>>();
      const auto& c = r.at("confusion");
      out += r.at("target").get<std::string>() + ',' + r.at("feature_key").get<std::string>() +
             ',' + r.at("algo").get<std::string>() + ',' + hp.key() + ',' +
             r.at("rows").dump() + ',' + c.at("tp").dump() + ',' + c.at("fp").dump() + ',' +
             c.at("fn").dump() + ',' + c.at("tn").dump() + ',' + csv_number(r.at("f2")) + ',' +
             csv_number(r.at("precision")) + ',' + csv_number(r.at("recall")) + ',' +
             csv_number(r.at("r2")) + ',' + csv_number(r.at("relative_error")) + ',' +
             csv_number(r.at("threshold")) + ',' +
             (r.at("threshold_separating").get<bool>() ? "1" : "0") + '\n';
    }
    atomic_write_text(staged / "summary.csv", out);
  }

  // F2 distribution across targets per (algorithm, feature config): the
  // five-number summaries behind a box plot.
  {
    std::string out = "feature_key,algo,count,min,q1,median,q3,max\n";
    for (const auto& g : run.at("distributions").at("f2")) {
      out += g.at("feature_key").get<std::string>() + ',' + g.at("algo").get<std::string>() +
             ',' + g.at("count").dump() + ',' + g.at("min").dump() + ',' + g.at("q1").dump() +
             ',' + g.at("median").dump() + ',' + g.at("q3").dump() + ',' + g.at("max").dump() +
             '\n';
    }
    atomic_write_text(staged / "f2_box.csv", out);
  }

  // Precision/recall per cell, for the scatter view.
  {
    std::string out = "target,feature_key,algo,precision,recall,f2\n";
    for (const auto& r : run.at("results")) {
      out += r.at("target").get<std::string>() + ',' + r.at("feature_key").get<std::string>() +
             ',' + r.at("algo").get<std::string>() + ',' + csv_number(r.at("precision")) + ',' +
             csv_number(r.at("recall")) + ',' + csv_number(r.at("f2")) + '\n';
    }
    atomic_write_text(staged / "pr_scatter.csv", out);
  }

  // Prediction error as a function of history length (regression cells).
  {
    std::string out = "feature_key,history_len,target,algo,relative_error,r2\n";
    std::map<std::string, int> history_by_key;
    for (const auto& fc : cfg.features) history_by_key[fc.key()] = fc.history_len;
    for (const auto& r : run.at("results")) {
      if (r.at("relative_error").is_null()) continue;
      const auto key = r.at("feature_key").get<std::string>();
      const auto it = history_by_key.find(key);
      const int history = it == history_by_key.end() ? -1 : it->second;
      out += key + ',' + std::to_string(history) + ',' + r.at("target").get<std::string>() +
             ',' + r.at("algo").get<std::string>() + ',' + csv_number(r.at("relative_error")) +
             ',' + csv_number(r.at("r2")) + '\n';
    }
    atomic_write_text(staged / "error_vs_history.csv", out);
  }

  // Concurrent-corruption degradation per target and level.
  if (!robustness.is_null()) {
    std::string out =
        "target,algo,feature_key,m,combinations,f2_min,f2_q1,f2_median,f2_q3,f2_max,"
        "error_rate_median,worst_combo,worst_f2\n";
    const auto algo = robustness.at("algo").get<std::string>();
    const auto fkey = robustness.at("feature_key").get<std::string>();
    for (const auto& [target, rep] : robustness.at("targets").items()) {
      const auto& baseline = rep.at("baseline");
      out += target + ',' + algo + ',' + fkey + ",0,1," + csv_number(baseline.at("f2")) + ',' +
             csv_number(baseline.at("f2")) + ',' + csv_number(baseline.at("f2")) + ',' +
             csv_number(baseline.at("f2")) + ',' + csv_number(baseline.at("f2")) + ',' +
             csv_number(rep.at("baseline_error_rate")) + ",," +
             csv_number(baseline.at("f2")) + '\n';
      for (const auto& level : rep.at("levels")) {
        const auto& f2 = level.at("f2");
        std::string combo;
        for (const auto& id : level.at("worst").at("combo")) {
          if (!combo.empty()) combo += '|';
          combo += id.get<std::string>();
        }
        out += target + ',' + algo + ',' + fkey + ',' + level.at("m").dump() + ',' +
               level.at("combinations").dump() + ',' + f2.at("min").dump() + ',' +
               f2.at("q1").dump() + ',' + f2.at("median").dump() + ',' + f2.at("q3").dump() +
               ',' + f2.at("max").dump() + ',' +
               (level.contains("error_rate") ? level.at("error_rate").at("median").dump() : "") +
               ',' + combo + ',' + level.at("worst").at("f2").dump() + '\n';
      }
    }
    atomic_write_text(staged / "robustness.csv", out);
  }

  promote_dir(staged, paths.report_dir);
  progress("report: wrote " + paths.report_dir.string());
}

}  // namespace

RunConfig load_run_config(const std::string& config_path, const CliOverrides& overrides) {
  if (!fs::exists(config_path)) {
    throw ConfigError("config file not found: " + config_path);
  }
  json doc = parse_config_json(read_text(config_path), "config " + config_path);
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(doc,
             {"grid", "data", "attack", "features", "algos", "hyper", "robustness", "seed",
              "workers", "out", "allow_mixed_hashes"},
             "config");

  // The seed override participates in the provenance hash — a run with a
  // different seed is a different experiment. Output dir and worker count
  // never affect results, so they are excluded.
  if (overrides.seed) doc["seed"] = *overrides.seed;
  json hashed = doc;
  hashed.erase("out");
  hashed.erase("workers");
  hashed.erase("allow_mixed_hashes");

  RunConfig cfg;
  cfg.config_hash = hex16(fnv1a(hashed.dump()));
  cfg.seed = get_field_or<std::uint64_t>(doc, "seed", "config", 1);

  cfg.workers = get_field_or(doc, "workers", "config", 0);
  if (overrides.workers) cfg.workers = *overrides.workers;
  if (cfg.workers < 0) throw ConfigError("workers must be >= 0");

  cfg.out_dir = get_field_or<std::string>(doc, "out", "config", "out");
  if (overrides.out) cfg.out_dir = *overrides.out;
  cfg.allow_mixed_hashes =
      get_field_or(doc, "allow_mixed_hashes", "config", false) || overrides.allow_mixed_hashes;

  // Grid: a path relative to the config file.
  if (!doc.contains("grid") || !doc.at("grid").is_string()) {
    throw ConfigError("config.grid must be a path to a grid JSON file");
  }
  fs::path grid_path = doc.at("grid").get<std::string>();
  if (grid_path.is_relative()) {
    grid_path = fs::path(config_path).parent_path() / grid_path;
  }
  try {
    cfg.grid = read_grid(grid_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config.grid: " + std::string(e.what()));
  }

  // Data block.
  const json data = doc.value("data", json::object());
  check_keys(data,
             {"generate", "years", "encoding", "loads", "load_overrides", "dispatch", "path",
              "mapping"},
             "data");
  cfg.generate = get_field_or(data, "generate", "data", true);
  cfg.years = get_field_or(data, "years", "data", 2);
  if (cfg.years < 1) throw ConfigError("data.years must be >= 1");
  const auto encoding = get_field_or<std::string>(data, "encoding", "data", "binary");
  if (encoding == "binary") {
    cfg.encoding = FrameEncoding::binary_f64_le_colmajor;
  } else if (encoding == "csv") {
    cfg.encoding = FrameEncoding::csv;
  } else {
    throw ConfigError("data.encoding must be \"binary\" or \"csv\", got \"" + encoding + "\"");
  }

  if (cfg.generate) {
    LoadProfileParams base;
    if (data.contains("loads")) base = parse_load_params(data.at("loads"), base, "data.loads");
    const json load_overrides = data.value("load_overrides", json::object());
    for (const auto& bus : cfg.grid.load_bus_ids) {
      LoadProfileParams p = base;
      if (load_overrides.contains(bus)) {
        p = parse_load_params(load_overrides.at(bus), base, "data.load_overrides." + bus);
      }
      try {
        p.validate();
      } catch (const std::exception& e) {
        throw ConfigError("load profile for " + bus + ": " + e.what());
      }
      cfg.loads.push_back(p);
    }
    for (auto it = load_overrides.begin(); it != load_overrides.end(); ++it) {
      if (std::find(cfg.grid.load_bus_ids.begin(), cfg.grid.load_bus_ids.end(), it.key()) ==
          cfg.grid.load_bus_ids.end()) {
        throw ConfigError("data.load_overrides names unknown load bus \"" + it.key() + "\"");
      }
    }
    cfg.dispatch = data.contains("dispatch") ? parse_dispatch(data.at("dispatch")) : DispatchParams{};
    try {
      cfg.dispatch.validate(cfg.grid);
    } catch (const std::exception& e) {
      throw ConfigError("data.dispatch: " + std::string(e.what()));
    }
  } else {
    cfg.import_path = get_field<std::string>(data, "path", "data");
    if (fs::path(cfg.import_path).is_relative()) {
      cfg.import_path = (fs::path(config_path).parent_path() / cfg.import_path).string();
    }
    cfg.import_mapping =
        get_field_or<std::map<std::string, std::string>>(data, "mapping", "data", {});
  }

  // Attack block.
  const json attack = doc.value("attack", json::object());
  check_keys(attack, {"targets", "fraction"}, "attack");
  cfg.targets = get_field_or<std::vector<std::string>>(attack, "targets", "attack", {});
  if (cfg.targets.empty()) {
    throw ConfigError("attack.targets must list at least one plant id");
  }
  const auto attackable = cfg.grid.attackable_plant_ids();
  std::set<std::string> seen_targets;
  for (const auto& t : cfg.targets) {
    if (std::find(attackable.begin(), attackable.end(), t) == attackable.end()) {
      throw ConfigError("attack target \"" + t + "\" is not an attackable plant of grid " +
                        cfg.grid.name);
    }
    if (!seen_targets.insert(t).second) {
      throw ConfigError("attack target \"" + t + "\" listed twice");
    }
  }
  cfg.attack_fraction = get_field_or(attack, "fraction", "attack", 0.10);
  if (!(cfg.attack_fraction > 0.0 && cfg.attack_fraction < 1.0)) {
    throw ConfigError("attack.fraction must be in (0, 1)");
  }

  // Feature configs.
  if (!doc.contains("features") || !doc.at("features").is_array() || doc.at("features").empty()) {
    throw ConfigError("config.features must be a non-empty array");
  }
  std::set<std::string> feature_keys;
  for (std::size_t i = 0; i < doc.at("features").size(); ++i) {
    const auto fc = parse_feature(doc.at("features").at(i), i);
    if (!feature_keys.insert(fc.key()).second) {
      throw ConfigError("duplicate feature config \"" + fc.key() + "\"");
    }
    cfg.features.push_back(fc);
  }

  // Algorithms, defaulting to the full roster.
  if (doc.contains("algos")) {
    for (const auto& name : get_field<std::vector<std::string>>(doc, "algos", "config")) {
      try {
        cfg.algos.push_back(algo_from_string(name));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config.algos: ") + e.what());
      }
    }
    if (cfg.algos.empty()) throw ConfigError("config.algos must not be empty");
  } else {
    cfg.algos = {Algo::nbc, Algo::knnc, Algo::svc, Algo::rfc, Algo::gbc, Algo::mlpc, Algo::mlpr};
  }
  for (const auto algo : cfg.algos) {
    bool matched = false;
    for (const auto& fc : cfg.features) {
      if ((fc.task == TaskKind::regression) == algo_is_regressor(algo)) matched = true;
    }
    if (!matched) {
      throw ConfigError("algorithm " + to_string(algo) + " has no feature config with a " +
                        (algo_is_regressor(algo) ? std::string("regression")
                                                 : std::string("classification")) +
                        " task");
    }
  }

  // Hyperparameter grids: explicit overrides, defaults otherwise.
  const json hyper = doc.value("hyper", json::object());
  for (auto it = hyper.begin(); it != hyper.end(); ++it) {
    Algo algo;
    try {
      algo = algo_from_string(it.key());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config.hyper: ") + e.what());
    }
    cfg.hyper[algo] = parse_hyper_points(algo, it.value());
  }
  for (const auto algo : cfg.algos) {
    if (!cfg.hyper.count(algo)) cfg.hyper[algo] = default_hyper_grid(algo).points;
  }

  // Robustness block.
  const json rb = doc.value("robustness", json::object());
  check_keys(rb,
             {"enabled", "algo", "feature_key", "m_max", "policy", "mode", "error_band_mw",
              "max_combinations", "context"},
             "robustness");
  auto& rc = cfg.robustness;
  rc.enabled = get_field_or(rb, "enabled", "robustness", false);
  try {
    if (rb.contains("algo")) rc.algo = algo_from_string(rb.at("algo").get<std::string>());
    if (rb.contains("policy")) {
      rc.policy = concurrent_policy_from_string(rb.at("policy").get<std::string>());
    }
    if (rb.contains("mode")) rc.mode = scan_mode_from_string(rb.at("mode").get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("robustness: ") + e.what());
  }
  rc.feature_key = get_field_or<std::string>(rb, "feature_key", "robustness", "");
  rc.m_max = get_field_or(rb, "m_max", "robustness", 1);
  if (rc.m_max < 0) throw ConfigError("robustness.m_max must be >= 0");
  rc.error_band_mw = get_field_or(rb, "error_band_mw", "robustness", 50.0);
  if (rc.error_band_mw <= 0) throw ConfigError("robustness.error_band_mw must be > 0");
  rc.max_combinations = get_field_or<std::int64_t>(rb, "max_combinations", "robustness", 20000);
  if (rc.max_combinations < 1) throw ConfigError("robustness.max_combinations must be >= 1");
  rc.context = get_field_or<std::vector<std::string>>(rb, "context", "robustness", {});
  for (const auto& id : rc.context) {
    if (std::find(attackable.begin(), attackable.end(), id) == attackable.end()) {
      throw ConfigError("robustness.context names non-attackable plant \"" + id + "\"");
    }
  }
  if (!rc.feature_key.empty()) {
    bool found = false;
    for (const auto& fc : cfg.features) {
      if (fc.key() == rc.feature_key) {
        if ((fc.task == TaskKind::regression) != algo_is_regressor(rc.algo)) {
          throw ConfigError("robustness.feature_key \"" + rc.feature_key +
                            "\" has the wrong task for algorithm " + to_string(rc.algo));
        }
        found = true;
      }
    }
    if (!found) {
      throw ConfigError("robustness.feature_key \"" + rc.feature_key +
                        "\" matches no feature config");
    }
  }

  return cfg;
}

int run_command(const std::string& command, const std::string& config_path,
                const CliOverrides& overrides) {
  try {
    const RunConfig cfg = load_run_config(config_path, overrides);
    if (command == "gen") {
      stage_gen(cfg);
    } else if (command == "attack") {
      stage_attack(cfg);
    } else if (command == "train") {
      stage_train(cfg);
    } else if (command == "eval") {
      stage_eval(cfg);
    } else if (command == "robustness") {
      stage_robustness(cfg);
    } else if (command == "report") {
      stage_report(cfg);
    } else if (command == "all") {
      stage_gen(cfg);
      stage_attack(cfg);
      stage_train(cfg);
      stage_eval(cfg);
      if (cfg.robustness.enabled) stage_robustness(cfg);
      stage_report(cfg);
    } else {
      throw ConfigError("unknown command \"" + command + "\"");
    }
    return 0;
  } catch (const ConfigError& e) {
    progress(std::string("config error: ") + e.what());
    return 1;
  } catch (const DataError& e) {
    progress(std::string("data error: ") + e.what());
    return 2;
  } catch (const TrainError& e) {
    progress(std::string("training error: ") + e.what());
    return 3;
  } catch (const EvalError& e) {
    progress(std::string("evaluation error: ") + e.what());
    return 4;
  } catch (const std::exception& e) {
    progress(std::string("error: ") + e.what());
    return 1;
  }
}

}  // namespace gridwatch
