#include "gridwatch/detectors/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gridwatch/errors.hpp"
#include "gridwatch/metrics.hpp"
#include "gridwatch/rng.hpp"

namespace gridwatch {

namespace {

double softplus(double f) {
  return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
}

struct Forward {
  // pre[l] and act[l] for hidden layers, plus the raw output column.
  std::vector<Eigen::MatrixXd> act;  // act[0] = input
  Eigen::VectorXd out;
};

Forward run_forward(const Mlp& net, const Eigen::MatrixXd& x) {
  Forward f;
  f.act.reserve(net.w.size());
  f.act.push_back(x);
  for (std::size_t l = 0; l + 1 < net.w.size(); ++l) {
    Eigen::MatrixXd z = f.act.back() * net.w[l].transpose();
    z.rowwise() += net.b[l].transpose();
    f.act.push_back(z.cwiseMax(0.0));
  }
  const std::size_t last = net.w.size() - 1;
  Eigen::MatrixXd z = f.act.back() * net.w[last].transpose();
  z.rowwise() += net.b[last].transpose();
  f.out = z.col(0);
  return f;
}

struct Adam {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t t = 0;

  explicit Adam(const Mlp& net) {
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      mw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
      vw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
      mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
      vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    }
  }

  void step(Mlp& net, const std::vector<Eigen::MatrixXd>& gw,
            const std::vector<Eigen::VectorXd>& gb, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      mw[l] = beta1 * mw[l] + (1.0 - beta1) * gw[l];
      vw[l] = beta2 * vw[l] + (1.0 - beta2) * gw[l].cwiseProduct(gw[l]);
      net.w[l] -= lr * (mw[l] / c1).cwiseQuotient(((vw[l] / c2).cwiseSqrt().array() + eps).matrix());
      mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
      vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
      net.b[l] -= lr * (mb[l] / c1).cwiseQuotient(((vb[l] / c2).cwiseSqrt().array() + eps).matrix());
    }
  }
};

}  // namespace

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              std::vector<Eigen::MatrixXd>& gw,
                              std::vector<Eigen::VectorXd>& gb) const {
  const auto n = x.rows();
  if (n == 0 || y.size() != n) {
    throw TrainError("mlp: bad batch shape");
  }
  const Forward f = run_forward(*this, x);
  const double inv_n = 1.0 / static_cast<double>(n);

  double loss = 0.0;
  Eigen::VectorXd dout(n);  // dL/d(raw output), already averaged
  if (classifier) {
    for (Eigen::Index i = 0; i < n; ++i) {
      loss += softplus(f.out(i)) - y(i) * f.out(i);
      dout(i) = (1.0 / (1.0 + std::exp(-f.out(i))) - y(i)) * inv_n;
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ys = (y(i) - y_mean) / y_scale;
      const double r = f.out(i) - ys;
      loss += r * r;
      dout(i) = 2.0 * r * inv_n;
    }
  }
  loss *= inv_n;

  gw.assign(w.size(), Eigen::MatrixXd());
  gb.assign(w.size(), Eigen::VectorXd());
  Eigen::MatrixXd delta = dout;  // n x units, starting at the output layer
  for (std::size_t l = w.size(); l-- > 0;) {
    gw[l] = delta.transpose() * f.act[l];
    gb[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * w[l]).cwiseProduct(
          (f.act[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

namespace {

Mlp init_net(Eigen::Index input_dim, const MlpOpts& opts, Rng& rng) {
  Mlp net;
  net.classifier = opts.classifier;
  std::vector<Eigen::Index> dims;
  dims.push_back(input_dim);
  for (const int hdim : opts.hidden) {
    if (hdim < 1) {
      throw TrainError("mlp: hidden width must be positive");
    }
    dims.push_back(hdim);
  }
  dims.push_back(1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double sd = std::sqrt(2.0 / static_cast<double>(dims[l]));
    Eigen::MatrixXd wl(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < wl.rows(); ++r) {
      for (Eigen::Index c = 0; c < wl.cols(); ++c) {
        wl(r, c) = rng.normal(0.0, sd);
      }
    }
    net.w.push_back(std::move(wl));
    net.b.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  return net;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::int64_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<std::int64_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  }
  return out;
}

/// Higher is better for both tasks: F2 (fallback -loss) or -MSE.
double validation_metric(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd values = net.predict_values(x);
  if (net.classifier) {
    bool any_positive = false;
    std::vector<int> pred(static_cast<std::size_t>(x.rows()));
    std::vector<std::uint8_t> truth(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      pred[static_cast<std::size_t>(i)] = values(i) >= 0.5 ? 1 : 0;
      truth[static_cast<std::size_t>(i)] = y(i) != 0.0 ? 1 : 0;
      any_positive = any_positive || truth[static_cast<std::size_t>(i)];
    }
    if (any_positive) {
      const auto score = f2_score(confusion_from(pred, truth));
      if (score) return *score;
    }
    // No anomalies in the split: fall back to cross-entropy.
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = std::clamp(values(i), 1e-12, 1.0 - 1e-12);
      loss += -(y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
    }
    return -loss / static_cast<double>(x.rows());
  }
  double mse = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = (values(i) - y(i)) / net.y_scale;
    mse += r * r;
  }
  return -mse / static_cast<double>(x.rows());
}

}  // namespace

Mlp Mlp::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpOpts& opts,
             std::uint64_t seed) {
  const auto n = x.rows();
  if (n < 2 || y.size() != n) {
    throw TrainError("mlp: bad training shape");
  }
  if (opts.max_epochs < 1 || opts.batch_size < 1 || opts.patience < 1 ||
      !(opts.learning_rate > 0.0) || opts.hidden.empty()) {
    throw TrainError("mlp: bad fit options");
  }
  if (!(opts.validation_fraction > 0.0) || !(opts.validation_fraction < 0.5)) {
    throw TrainError("mlp: validation fraction must lie in (0, 0.5)");
  }
  if (opts.classifier) {
    int positives = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) {
        throw TrainError("mlp: classifier labels must be 0 or 1");
      }
      positives += y(i) == 1.0;
    }
    if (positives == 0 || positives == static_cast<int>(n)) {
      throw TrainError("mlp: training data contains a single class");
    }
  }

  Rng rng(seed);
  Mlp net = init_net(x.cols(), opts, rng);
  if (!opts.classifier) {
    net.y_mean = y.mean();
    const double var = (y.array() - net.y_mean).square().mean();
    net.y_scale = var > 0.0 ? std::sqrt(var) : 1.0;
    if (var == 0.0) {
      // Degenerate target: after centering it is identically zero, so the
      // loss has the closed-form optimum "output layer off". Return it
      // instead of asking gradient descent to approximate it.
      net.w.back().setZero();
      net.b.back().setZero();
      net.epochs_run = 0;
      return net;
    }
  }

  // Internal validation split for early stopping.
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto val_n = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(opts.validation_fraction * static_cast<double>(n))));
  std::vector<std::int64_t> val_rows(order.begin(), order.begin() + val_n);
  std::vector<std::int64_t> train_rows(order.begin() + val_n, order.end());
  if (train_rows.empty()) {
    throw TrainError("mlp: no rows left to train after validation split");
  }
  const Eigen::MatrixXd val_x = take_rows(x, val_rows);
  const Eigen::VectorXd val_y = take_rows(y, val_rows);

  Adam adam(net);
  std::vector<Eigen::MatrixXd> gw;
  std::vector<Eigen::VectorXd> gb;

  std::vector<Eigen::MatrixXd> best_w = net.w;
  std::vector<Eigen::VectorXd> best_b = net.b;
  // Only trained states compete for the snapshot; scoring the random init
  // would set a bar the first epochs may not clear, ending training with
  // untrained weights restored.
  double best_metric = -std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    rng.shuffle(train_rows);
    for (std::size_t start = 0; start < train_rows.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t stop =
          std::min(train_rows.size(), start + static_cast<std::size_t>(opts.batch_size));
      const std::vector<std::int64_t> batch(train_rows.begin() + static_cast<std::ptrdiff_t>(start),
                                            train_rows.begin() + static_cast<std::ptrdiff_t>(stop));
      net.loss_and_gradient(take_rows(x, batch), take_rows(y, batch), gw, gb);
      adam.step(net, gw, gb, opts.learning_rate);
    }
    net.epochs_run = epoch + 1;

    const double metric = validation_metric(net, val_x, val_y);
    if (metric > best_metric + opts.min_delta) {
      best_metric = metric;
      best_w = net.w;
      best_b = net.b;
      stale = 0;
    } else {
      ++stale;
      if (stale >= opts.patience) break;
    }
  }
  net.w = std::move(best_w);
  net.b = std::move(best_b);
  return net;
}

Eigen::VectorXd Mlp::predict_values(const Eigen::MatrixXd& x) const {
  if (x.cols() != w.front().cols()) {
    throw EvalError("mlp: input width " + std::to_string(x.cols()) + ", model expects " +
                    std::to_string(w.front().cols()));
  }
  Eigen::VectorXd out = run_forward(*this, x).out;
  if (classifier) {
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out(i) = 1.0 / (1.0 + std::exp(-out(i)));
    }
  } else {
    out = (out.array() * y_scale + y_mean).matrix();
  }
  return out;
}

double Mlp::predict_value(const Eigen::VectorXd& x) const {
  return predict_values(x.transpose())(0);
}

int Mlp::predict_label(const Eigen::VectorXd& x) const {
  return predict_value(x) >= 0.5 ? 1 : 0;
}

std::vector<int> Mlp::predict_labels(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd values = predict_values(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = values(i) >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace gridwatch
