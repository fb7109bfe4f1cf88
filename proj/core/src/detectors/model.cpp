#include "gridwatch/detectors/model.hpp"

#include <chrono>
#include <cmath>

#include "json.hpp"

#include "gridwatch/errors.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

std::string to_string(Algo algo) {
  switch (algo) {
    case Algo::nbc: return "nbc";
    case Algo::knnc: return "knnc";
    case Algo::svc: return "svc";
    case Algo::rfc: return "rfc";
    case Algo::gbc: return "gbc";
    case Algo::mlpc: return "mlpc";
    case Algo::mlpr: return "mlpr";
  }
  throw ConfigError("bad algo enum");
}

Algo algo_from_string(const std::string& s) {
  if (s == "nbc") return Algo::nbc;
  if (s == "knnc") return Algo::knnc;
  if (s == "svc") return Algo::svc;
  if (s == "rfc") return Algo::rfc;
  if (s == "gbc") return Algo::gbc;
  if (s == "mlpc") return Algo::mlpc;
  if (s == "mlpr") return Algo::mlpr;
  throw ConfigError("unknown algorithm '" + s + "'");
}

bool algo_is_regressor(Algo algo) { return algo == Algo::mlpr; }

std::string HyperPoint::key() const {
  if (k) return "k=" + std::to_string(*k);
  if (c) {
    // Cs are round numbers; print without trailing zeros.
    const auto v = static_cast<long long>(*c);
    return "c=" + (static_cast<double>(v) == *c ? std::to_string(v) : std::to_string(*c));
  }
  if (trees) return "trees=" + std::to_string(*trees);
  if (stages) return "stages=" + std::to_string(*stages);
  if (hidden) {
    std::string s = "hidden=";
    for (std::size_t i = 0; i < hidden->size(); ++i) {
      if (i) s += "x";
      s += std::to_string((*hidden)[i]);
    }
    return s;
  }
  return "default";
}

double HyperPoint::complexity() const {
  if (k) return -static_cast<double>(*k);
  if (c) return *c;
  if (trees) return *trees;
  if (stages) return *stages;
  if (hidden) {
    double total = 0.0;
    for (const int width : *hidden) total += width;
    return total + 1e6 * static_cast<double>(hidden->size());
  }
  return 0.0;
}

HyperGrid default_hyper_grid(Algo algo) {
  HyperGrid grid;
  grid.algo = algo;
  const auto add = [&grid](HyperPoint p) { grid.points.push_back(std::move(p)); };
  switch (algo) {
    case Algo::nbc:
      add({});
      break;
    case Algo::knnc:
      for (const int k : {1, 2, 5, 10, 20, 50, 100, 200, 500}) {
        HyperPoint p;
        p.k = k;
        add(p);
      }
      break;
    case Algo::svc:
      for (const double c : {300.0, 3000.0, 30000.0}) {
        HyperPoint p;
        p.c = c;
        add(p);
      }
      break;
    case Algo::rfc:
      for (const int t : {20, 40, 60, 80, 100}) {
        HyperPoint p;
        p.trees = t;
        add(p);
      }
      break;
    case Algo::gbc:
      for (const int s : {10, 100, 1000}) {
        HyperPoint p;
        p.stages = s;
        add(p);
      }
      break;
    case Algo::mlpc:
      for (int layers = 1; layers <= 4; ++layers) {
        for (const int width : {50, 200, 1000}) {
          HyperPoint p;
          p.hidden = std::vector<int>(static_cast<std::size_t>(layers), width);
          add(p);
        }
      }
      break;
    case Algo::mlpr:
      for (int layers = 1; layers <= 4; ++layers) {
        for (const int width : {50, 200, 1000, 5000}) {
          HyperPoint p;
          p.hidden = std::vector<int>(static_cast<std::size_t>(layers), width);
          add(p);
        }
      }
      break;
  }
  return grid;
}

namespace {

bool wants_scaling(Algo algo) {
  return algo == Algo::knnc || algo == Algo::svc || algo == Algo::mlpc || algo == Algo::mlpr;
}

void check_finite(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) {
    throw TrainError("training matrix contains non-finite values");
  }
}

void check_hyper(Algo algo, const HyperPoint& h) {
  const bool extra_k = h.k.has_value() && algo != Algo::knnc;
  const bool extra_c = h.c.has_value() && algo != Algo::svc;
  const bool extra_trees = h.trees.has_value() && algo != Algo::rfc;
  const bool extra_stages = h.stages.has_value() && algo != Algo::gbc;
  const bool extra_hidden = h.hidden.has_value() && algo != Algo::mlpc && algo != Algo::mlpr;
  if (extra_k || extra_c || extra_trees || extra_stages || extra_hidden) {
    throw TrainError("hyper point has fields foreign to " + to_string(algo));
  }
  switch (algo) {
    case Algo::nbc:
      break;
    case Algo::knnc:
      if (!h.k || *h.k < 1) throw TrainError("knnc needs k >= 1");
      break;
    case Algo::svc:
      if (!h.c || !(*h.c > 0.0)) throw TrainError("svc needs C > 0");
      break;
    case Algo::rfc:
      if (!h.trees || *h.trees < 1) throw TrainError("rfc needs trees >= 1");
      break;
    case Algo::gbc:
      if (!h.stages || *h.stages < 1) throw TrainError("gbc needs stages >= 1");
      break;
    case Algo::mlpc:
    case Algo::mlpr:
      if (!h.hidden || h.hidden->empty()) throw TrainError("mlp needs hidden layer widths");
      break;
  }
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

ClassifierModel train_classifier(Algo algo, const Eigen::MatrixXd& x, const std::vector<int>& y,
                                 const HyperPoint& hyper, std::uint64_t seed) {
  if (algo_is_regressor(algo)) {
    throw TrainError("train_classifier called with a regression algorithm");
  }
  check_hyper(algo, hyper);
  check_finite(x);

  ClassifierModel model;
  model.algo = algo;
  model.hyper = hyper;
  model.info.seed = seed;

  Eigen::MatrixXd xs;
  const Eigen::MatrixXd* input = &x;
  if (wants_scaling(algo)) {
    model.scaler = fit_scaler(x);
    xs = apply_scaler(*model.scaler, x);
    input = &xs;
  }

  Stopwatch clock;
  switch (algo) {
    case Algo::nbc:
      model.impl = GaussianNb::fit(*input, y);
      break;
    case Algo::knnc:
      model.impl = KnnClassifier::fit(*input, y, *hyper.k);
      break;
    case Algo::svc: {
      LinearSvc::FitOpts opts;
      opts.c = *hyper.c;
      model.impl = LinearSvc::fit(*input, y, opts, seed);
      break;
    }
    case Algo::rfc: {
      RandomForest::FitOpts opts;
      opts.tree_count = *hyper.trees;
      model.impl = RandomForest::fit(*input, y, opts, seed);
      break;
    }
    case Algo::gbc: {
      GradientBoosting::FitOpts opts;
      opts.stage_count = *hyper.stages;
      model.impl = GradientBoosting::fit(*input, y, opts);
      break;
    }
    case Algo::mlpc: {
      MlpOpts opts;
      opts.hidden = *hyper.hidden;
      opts.classifier = true;
      Eigen::VectorXd yd(static_cast<Eigen::Index>(y.size()));
      for (std::size_t i = 0; i < y.size(); ++i) {
        yd(static_cast<Eigen::Index>(i)) = y[i];
      }
      Mlp net = Mlp::fit(*input, yd, opts, seed);
      model.info.epochs_run = net.epochs_run;
      model.impl = std::move(net);
      break;
    }
    default:
      throw TrainError("unhandled classifier algorithm");
  }
  model.info.train_seconds = clock.seconds();
  return model;
}

RegressorModel train_regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const HyperPoint& hyper, std::uint64_t seed) {
  check_hyper(Algo::mlpr, hyper);
  check_finite(x);
  if (!y.allFinite()) {
    throw TrainError("training targets contain non-finite values");
  }

  RegressorModel model;
  model.hyper = hyper;
  model.info.seed = seed;
  model.scaler = fit_scaler(x);
  const Eigen::MatrixXd xs = apply_scaler(*model.scaler, x);

  MlpOpts opts;
  opts.hidden = *hyper.hidden;
  opts.classifier = false;

  Stopwatch clock;
  model.impl = Mlp::fit(xs, y, opts, seed);
  model.info.train_seconds = clock.seconds();
  model.info.epochs_run = model.impl.epochs_run;
  return model;
}

int ClassifierModel::predict_one(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd xs = scaler ? apply_scaler_row(*scaler, x) : x;
  return std::visit(
      [&xs](const auto& impl) -> int {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, Mlp>) {
          return impl.predict_label(xs);
        } else {
          return impl.predict_one(xs);
        }
      },
      impl);
}

std::vector<int> ClassifierModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd xs = scaler ? apply_scaler(*scaler, x) : x;
  return std::visit(
      [&xs](const auto& impl) -> std::vector<int> {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, Mlp>) {
          return impl.predict_labels(xs);
        } else {
          return impl.predict(xs);
        }
      },
      impl);
}

double RegressorModel::predict_one(const Eigen::VectorXd& x) const {
  return impl.predict_value(scaler ? apply_scaler_row(*scaler, x) : x);
}

Eigen::VectorXd RegressorModel::predict(const Eigen::MatrixXd& x) const {
  return impl.predict_values(scaler ? apply_scaler(*scaler, x) : x);
}

// --- serialization ---------------------------------------------------------

namespace {

using nlohmann::json;

json mat_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::MatrixXd>(data.data(), m.rows(), m.cols()) = m;
  j["data"] = data;  // column-major
  return j;
}

Eigen::MatrixXd mat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DataError("model file: matrix payload size mismatch");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json hyper_to_json(const HyperPoint& h) {
  json j = json::object();
  if (h.k) j["k"] = *h.k;
  if (h.c) j["c"] = *h.c;
  if (h.trees) j["trees"] = *h.trees;
  if (h.stages) j["stages"] = *h.stages;
  if (h.hidden) j["hidden"] = *h.hidden;
  return j;
}

HyperPoint hyper_from_json(const json& j) {
  HyperPoint h;
  if (j.contains("k")) h.k = j.at("k").get<int>();
  if (j.contains("c")) h.c = j.at("c").get<double>();
  if (j.contains("trees")) h.trees = j.at("trees").get<int>();
  if (j.contains("stages")) h.stages = j.at("stages").get<int>();
  if (j.contains("hidden")) h.hidden = j.at("hidden").get<std::vector<int>>();
  return h;
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"value", n.value},
                     {"n0", n.n0},
                     {"n1", n.n1}});
  }
  return json{{"nodes", nodes}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree tree;
  for (const auto& nj : j.at("nodes")) {
    TreeNode n;
    n.feature = nj.at("feature").get<int>();
    n.threshold = nj.at("threshold").get<double>();
    n.left = nj.at("left").get<int>();
    n.right = nj.at("right").get<int>();
    n.value = nj.at("value").get<double>();
    n.n0 = nj.at("n0").get<double>();
    n.n1 = nj.at("n1").get<double>();
    tree.nodes.push_back(n);
  }
  return tree;
}

json mlp_to_json(const Mlp& net) {
  json j;
  j["classifier"] = net.classifier;
  j["y_mean"] = net.y_mean;
  j["y_scale"] = net.y_scale;
  j["epochs_run"] = net.epochs_run;
  j["w"] = json::array();
  j["b"] = json::array();
  for (const auto& wl : net.w) j["w"].push_back(mat_to_json(wl));
  for (const auto& bl : net.b) j["b"].push_back(vec_to_json(bl));
  return j;
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  net.classifier = j.at("classifier").get<bool>();
  net.y_mean = j.at("y_mean").get<double>();
  net.y_scale = j.at("y_scale").get<double>();
  net.epochs_run = j.at("epochs_run").get<int>();
  for (const auto& wj : j.at("w")) net.w.push_back(mat_from_json(wj));
  for (const auto& bj : j.at("b")) net.b.push_back(vec_from_json(bj));
  if (net.w.empty() || net.w.size() != net.b.size()) {
    throw DataError("model file: inconsistent mlp layers");
  }
  return net;
}

json impl_to_json(const ClassifierModel& model) {
  json j;
  switch (model.algo) {
    case Algo::nbc: {
      const auto& m = std::get<GaussianNb>(model.impl);
      j["log_prior"] = std::vector<double>{m.log_prior(0), m.log_prior(1)};
      j["mean"] = mat_to_json(m.mean);
      j["var"] = mat_to_json(m.var);
      break;
    }
    case Algo::knnc: {
      const auto& m = std::get<KnnClassifier>(model.impl);
      j["k"] = m.k;
      j["train_x"] = mat_to_json(m.train_x);
      j["train_y"] = m.train_y;
      break;
    }
    case Algo::svc: {
      const auto& m = std::get<LinearSvc>(model.impl);
      j["w"] = vec_to_json(m.w);
      j["b"] = m.b;
      j["c"] = m.c;
      break;
    }
    case Algo::rfc: {
      const auto& m = std::get<RandomForest>(model.impl);
      j["trees"] = json::array();
      for (const auto& tree : m.trees) j["trees"].push_back(tree_to_json(tree));
      break;
    }
    case Algo::gbc: {
      const auto& m = std::get<GradientBoosting>(model.impl);
      j["f0"] = m.f0;
      j["shrinkage"] = m.shrinkage;
      j["train_loss"] = m.train_loss;
      j["stages"] = json::array();
      for (const auto& tree : m.stages) j["stages"].push_back(tree_to_json(tree));
      break;
    }
    case Algo::mlpc:
      j = mlp_to_json(std::get<Mlp>(model.impl));
      break;
    default:
      throw DataError("impl_to_json: bad algo");
  }
  return j;
}

void impl_from_json(ClassifierModel& model, const json& j) {
  switch (model.algo) {
    case Algo::nbc: {
      GaussianNb m;
      const auto prior = j.at("log_prior").get<std::vector<double>>();
      if (prior.size() != 2) throw DataError("model file: bad prior");
      m.log_prior << prior[0], prior[1];
      m.mean = mat_from_json(j.at("mean"));
      m.var = mat_from_json(j.at("var"));
      model.impl = std::move(m);
      break;
    }
    case Algo::knnc: {
      KnnClassifier m;
      m.k = j.at("k").get<int>();
      m.train_x = mat_from_json(j.at("train_x"));
      m.train_y = j.at("train_y").get<std::vector<int>>();
      model.impl = std::move(m);
      break;
    }
    case Algo::svc: {
      LinearSvc m;
      m.w = vec_from_json(j.at("w"));
      m.b = j.at("b").get<double>();
      m.c = j.at("c").get<double>();
      model.impl = std::move(m);
      break;
    }
    case Algo::rfc: {
      RandomForest m;
      for (const auto& tj : j.at("trees")) m.trees.push_back(tree_from_json(tj));
      model.impl = std::move(m);
      break;
    }
    case Algo::gbc: {
      GradientBoosting m;
      m.f0 = j.at("f0").get<double>();
      m.shrinkage = j.at("shrinkage").get<double>();
      m.train_loss = j.at("train_loss").get<std::vector<double>>();
      for (const auto& tj : j.at("stages")) m.stages.push_back(tree_from_json(tj));
      model.impl = std::move(m);
      break;
    }
    case Algo::mlpc:
      model.impl = mlp_from_json(j);
      break;
    default:
      throw DataError("model file: bad algo");
  }
}

json scaler_to_json(const std::optional<Scaler>& scaler) {
  if (!scaler) return nullptr;
  return json{{"mean", vec_to_json(scaler->mean)}, {"sd", vec_to_json(scaler->sd)}};
}

std::optional<Scaler> scaler_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  Scaler s;
  s.mean = vec_from_json(j.at("mean"));
  s.sd = vec_from_json(j.at("sd"));
  return s;
}

json info_to_json(const FitInfo& info) {
  return json{{"seed", info.seed},
              {"epochs_run", info.epochs_run},
              {"timing", {{"train_seconds", info.train_seconds}}}};
}

FitInfo info_from_json(const json& j) {
  FitInfo info;
  info.seed = j.at("seed").get<std::uint64_t>();
  info.epochs_run = j.at("epochs_run").get<int>();
  info.train_seconds = j.at("timing").at("train_seconds").get<double>();
  return info;
}

json parse_model_json(const std::string& text, const std::string& kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  if (j.value("schema_version", 0) != 1) {
    throw DataError("model file: unsupported schema version");
  }
  if (j.value("kind", "") != kind) {
    throw DataError("model file: expected kind '" + kind + "'");
  }
  return j;
}

}  // namespace

std::string classifier_to_json(const ClassifierModel& model) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "classifier";
  j["algo"] = to_string(model.algo);
  j["hyper"] = hyper_to_json(model.hyper);
  j["scaler"] = scaler_to_json(model.scaler);
  j["info"] = info_to_json(model.info);
  j["impl"] = impl_to_json(model);
  return j.dump(2) + "\n";
}

ClassifierModel classifier_from_json(const std::string& text) {
  const json j = parse_model_json(text, "classifier");
  ClassifierModel model;
  try {
    model.algo = algo_from_string(j.at("algo").get<std::string>());
    model.hyper = hyper_from_json(j.at("hyper"));
    model.scaler = scaler_from_json(j.at("scaler"));
    model.info = info_from_json(j.at("info"));
    impl_from_json(model, j.at("impl"));
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  return model;
}

std::string regressor_to_json(const RegressorModel& model) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "regressor";
  j["algo"] = to_string(model.algo);
  j["hyper"] = hyper_to_json(model.hyper);
  j["scaler"] = scaler_to_json(model.scaler);
  j["info"] = info_to_json(model.info);
  j["impl"] = mlp_to_json(model.impl);
  return j.dump(2) + "\n";
}

RegressorModel regressor_from_json(const std::string& text) {
  const json j = parse_model_json(text, "regressor");
  RegressorModel model;
  try {
    model.algo = algo_from_string(j.at("algo").get<std::string>());
    model.hyper = hyper_from_json(j.at("hyper"));
    model.scaler = scaler_from_json(j.at("scaler"));
    model.info = info_from_json(j.at("info"));
    model.impl = mlp_from_json(j.at("impl"));
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  return model;
}

std::string residual_detector_to_json(const ResidualDetector& detector) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "residual_detector";
  j["regressor"] = json::parse(regressor_to_json(detector.regressor));
  j["threshold"] = {{"threshold", detector.threshold.threshold},
                    {"rated_power", detector.threshold.rated_power},
                    {"separating", detector.threshold.separating},
                    {"holdout_f2", detector.threshold.holdout_f2}};
  return j.dump(2) + "\n";
}

ResidualDetector residual_detector_from_json(const std::string& text) {
  const json j = parse_model_json(text, "residual_detector");
  ResidualDetector d;
  try {
    d.regressor = regressor_from_json(j.at("regressor").dump());
    const auto& tj = j.at("threshold");
    d.threshold.threshold = tj.at("threshold").get<double>();
    d.threshold.rated_power = tj.at("rated_power").get<double>();
    d.threshold.separating = tj.at("separating").get<bool>();
    d.threshold.holdout_f2 = tj.at("holdout_f2").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  return d;
}

}  // namespace gridwatch
