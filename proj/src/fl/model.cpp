#include "flowfed/fl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "flowfed/error.hpp"
#include "flowfed/seed.hpp"

namespace flowfed::fl {

namespace {

struct Layout {
  std::size_t in = 0;
  std::size_t hidden = 0;  // 0 for logistic
  std::size_t out = 0;
  // Offsets into the flat vector.
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  std::size_t total = 0;
};

Layout layout_of(const ModelParams& p) {
  Layout l;
  const auto& d = p.layer_dims;
  if (d.size() == 2) {
    l.in = d[0];
    l.out = d[1];
    l.w1 = 0;
    l.b1 = l.in * l.out;
    l.total = l.b1 + l.out;
  } else if (d.size() == 3) {
    l.in = d[0];
    l.hidden = d[1];
    l.out = d[2];
    l.w1 = 0;
    l.b1 = l.in * l.hidden;
    l.w2 = l.b1 + l.hidden;
    l.b2 = l.w2 + l.hidden * l.out;
    l.total = l.b2 + l.out;
  } else {
    throw Error(ErrorCode::ShapeMismatch, "unsupported layer_dims");
  }
  if (l.total != p.values.size())
    throw Error(ErrorCode::ShapeMismatch, "parameter count does not match layer_dims");
  return l;
}

// Softmax cross-entropy for one row; on return `z` holds dLoss/dlogits.
double softmax_xent(std::vector<double>& z, int label) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double lse = zmax + std::log(sum);
  const double loss = lse - z[static_cast<std::size_t>(label)];
  for (auto& v : z) v = std::exp(v - lse);
  z[static_cast<std::size_t>(label)] -= 1.0;
  return loss;
}

}  // namespace

bool ModelParams::all_finite() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

ModelParams init_params(const ModelSpec& spec, std::size_t dim, int n_classes,
                        std::uint64_t seed) {
  const auto classes = static_cast<std::size_t>(n_classes);
  ModelParams p;
  if (spec.kind == ModelKind::Logistic) {
    p.layer_dims = {dim, classes};
    p.values.assign(dim * classes + classes, 0.0);
    return p;
  }
  if (spec.hidden == 0) throw Error(ErrorCode::InvalidArgs, "MLP needs hidden > 0");
  p.layer_dims = {dim, spec.hidden, classes};
  const auto l = [&] {
    p.values.assign(dim * spec.hidden + spec.hidden + spec.hidden * classes + classes, 0.0);
    return layout_of(p);
  }();
  auto rng = make_rng({seed, stream::kModelInit});
  std::normal_distribution<double> g1(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::normal_distribution<double> g2(0.0, 1.0 / std::sqrt(static_cast<double>(spec.hidden)));
  for (std::size_t i = 0; i < dim * spec.hidden; ++i) p.values[l.w1 + i] = g1(rng);
  for (std::size_t i = 0; i < spec.hidden * classes; ++i) p.values[l.w2 + i] = g2(rng);
  return p;
}

double cross_entropy(const ModelParams& params, const Dataset& data,
                     std::span<const std::size_t> rows, std::vector<double>* grad) {
  const Layout l = layout_of(params);
  if (l.in != data.dim || l.out != static_cast<std::size_t>(data.n_classes))
    throw Error(ErrorCode::ShapeMismatch, "model shape does not match dataset");
  if (rows.empty()) throw Error(ErrorCode::InvalidArgs, "cross_entropy over no rows");
  const double* w = params.values.data();
  if (grad) grad->assign(params.values.size(), 0.0);
  double* g = grad ? grad->data() : nullptr;

  std::vector<double> z(l.out);
  std::vector<double> h(l.hidden);
  std::vector<double> dh(l.hidden);
  double total = 0.0;
  for (auto r : rows) {
    const double* x = data.features.data() + r * l.in;
    const int y = data.labels[r];
    if (l.hidden == 0) {
      for (std::size_t c = 0; c < l.out; ++c) {
        const double* wc = w + l.w1 + c * l.in;
        double acc = w[l.b1 + c];
        for (std::size_t j = 0; j < l.in; ++j) acc += wc[j] * x[j];
        z[c] = acc;
      }
      total += softmax_xent(z, y);
      if (g) {
        for (std::size_t c = 0; c < l.out; ++c) {
          double* gc = g + l.w1 + c * l.in;
          for (std::size_t j = 0; j < l.in; ++j) gc[j] += z[c] * x[j];
          g[l.b1 + c] += z[c];
        }
      }
    } else {
      for (std::size_t k = 0; k < l.hidden; ++k) {
        const double* wk = w + l.w1 + k * l.in;
        double acc = w[l.b1 + k];
        for (std::size_t j = 0; j < l.in; ++j) acc += wk[j] * x[j];
        h[k] = std::tanh(acc);
      }
      for (std::size_t c = 0; c < l.out; ++c) {
        const double* wc = w + l.w2 + c * l.hidden;
        double acc = w[l.b2 + c];
        for (std::size_t k = 0; k < l.hidden; ++k) acc += wc[k] * h[k];
        z[c] = acc;
      }
      total += softmax_xent(z, y);
      if (g) {
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t c = 0; c < l.out; ++c) {
          const double* wc = w + l.w2 + c * l.hidden;
          double* gc = g + l.w2 + c * l.hidden;
          for (std::size_t k = 0; k < l.hidden; ++k) {
            gc[k] += z[c] * h[k];
            dh[k] += z[c] * wc[k];
          }
          g[l.b2 + c] += z[c];
        }
        for (std::size_t k = 0; k < l.hidden; ++k) {
          const double da = dh[k] * (1.0 - h[k] * h[k]);
          double* gk = g + l.w1 + k * l.in;
          for (std::size_t j = 0; j < l.in; ++j) gk[j] += da * x[j];
          g[l.b1 + k] += da;
        }
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (g)
    for (auto& v : *grad) v *= inv;
  return total * inv;
}

double proximal_penalty(std::span<const double> w, std::span<const double> anchor,
                        double mu) {
  if (w.size() != anchor.size()) throw Error(ErrorCode::ShapeMismatch, "proximal shapes");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - anchor[i];
    s += d * d;
  }
  return 0.5 * mu * s;
}

void add_proximal_gradient(std::span<const double> w, std::span<const double> anchor,
                           double mu, std::span<double> grad) {
  if (w.size() != anchor.size() || w.size() != grad.size())
    throw Error(ErrorCode::ShapeMismatch, "proximal shapes");
  for (std::size_t i = 0; i < w.size(); ++i) grad[i] += mu * (w[i] - anchor[i]);
}

TrainResult local_train(const ModelParams& global, const Dataset& data,
                        std::span<const std::size_t> rows, const TrainConfig& cfg,
                        std::uint64_t seed) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgs, "local_train on an empty slice");
  if (cfg.batch_size == 0) throw Error(ErrorCode::InvalidArgs, "batch_size must be > 0");
  ModelParams w = global;
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::vector<double> grad;
  auto rng = make_rng({seed, stream::kTraining});
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batch_no = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++batch_no) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const double loss = cross_entropy(
          w, data, std::span<const std::size_t>(order.data() + lo, hi - lo), &grad);
      if (!std::isfinite(loss)) throw NumericalDivergenceError(epoch, batch_no);
      if (cfg.mu > 0.0) add_proximal_gradient(w.values, global.values, cfg.mu, grad);
      for (std::size_t i = 0; i < grad.size(); ++i) w.values[i] -= cfg.lr * grad[i];
    }
  }
  if (!w.all_finite())
    throw NumericalDivergenceError(cfg.local_epochs - 1, (order.size() - 1) / cfg.batch_size);
  const double final_loss = cross_entropy(w, data, rows, nullptr);
  if (!std::isfinite(final_loss))
    throw NumericalDivergenceError(cfg.local_epochs - 1, (order.size() - 1) / cfg.batch_size);
  return TrainResult{std::move(w), final_loss};
}

Evaluation evaluate(const ModelParams& params, const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgs, "evaluate on an empty dataset");
  const Layout l = layout_of(params);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double loss = cross_entropy(params, data, all, nullptr);

  const double* w = params.values.data();
  std::vector<double> z(l.out);
  std::vector<double> h(l.hidden);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double* x = data.features.data() + r * l.in;
    if (l.hidden == 0) {
      for (std::size_t c = 0; c < l.out; ++c) {
        double acc = w[l.b1 + c];
        for (std::size_t j = 0; j < l.in; ++j) acc += w[l.w1 + c * l.in + j] * x[j];
        z[c] = acc;
      }
    } else {
      for (std::size_t k = 0; k < l.hidden; ++k) {
        double acc = w[l.b1 + k];
        for (std::size_t j = 0; j < l.in; ++j) acc += w[l.w1 + k * l.in + j] * x[j];
        h[k] = std::tanh(acc);
      }
      for (std::size_t c = 0; c < l.out; ++c) {
        double acc = w[l.b2 + c];
        for (std::size_t k = 0; k < l.hidden; ++k) acc += w[l.w2 + c * l.hidden + k] * h[k];
        z[c] = acc;
      }
    }
    // max_element returns the first maximum, i.e. the smallest class id.
    const auto pred = std::max_element(z.begin(), z.end()) - z.begin();
    if (pred == data.labels[r]) ++correct;
  }
  return Evaluation{loss, static_cast<double>(correct) / static_cast<double>(data.size())};
}

}  // namespace flowfed::fl
