#include "flowfed/fl/aggregation.hpp"

#include <cmath>

#include "flowfed/error.hpp"

namespace flowfed::fl {

namespace {

void require_same_shape(const ModelParams& a, const ModelParams& b) {
  if (a.layer_dims != b.layer_dims || a.values.size() != b.values.size())
    throw Error(ErrorCode::ShapeMismatch, "model parameter shapes differ");
}

void init_state(std::vector<double>& s, std::size_t n) {
  if (s.empty()) s.assign(n, 0.0);
  if (s.size() != n) throw Error(ErrorCode::ShapeMismatch, "optimizer state shape differs");
}

}  // namespace

const char* aggregator_name(const AggregatorSpec& spec) noexcept {
  switch (spec.index()) {
    case 0: return "fedavg";
    case 1: return "fedavgm";
    default: return "fedyogi";
  }
}

ModelParams aggregate_fedavg(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw Error(ErrorCode::InvalidArgs, "no client updates to aggregate");
  ModelParams out;
  out.layer_dims = updates.front().params.layer_dims;
  out.values.assign(updates.front().params.values.size(), 0.0);
  double total = 0.0;
  for (const auto& u : updates) {
    require_same_shape(updates.front().params, u.params);
    const double n = static_cast<double>(u.n_samples);
    total += n;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += n * u.params.values[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgs, "client updates carry no samples");
  for (auto& v : out.values) v /= total;
  return out;
}

std::pair<ModelParams, MomentumState> server_update_fedavgm(MomentumState state,
                                                            const ModelParams& w_prev,
                                                            const ModelParams& fedavg_result,
                                                            const FedAvgMSpec& spec) {
  require_same_shape(w_prev, fedavg_result);
  const std::size_t n = w_prev.values.size();
  init_state(state.m, n);
  ModelParams next = w_prev;
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = w_prev.values[i] - fedavg_result.values[i];
    state.m[i] = spec.beta * state.m[i] + delta;
    next.values[i] = w_prev.values[i] - spec.server_lr * state.m[i];
  }
  return {std::move(next), std::move(state)};
}

std::pair<ModelParams, YogiState> server_update_fedyogi(YogiState state,
                                                        const ModelParams& w_prev,
                                                        const ModelParams& fedavg_result,
                                                        const FedYogiSpec& spec) {
  require_same_shape(w_prev, fedavg_result);
  const std::size_t n = w_prev.values.size();
  init_state(state.m, n);
  init_state(state.v, n);
  const double floor = spec.tau * spec.tau;
  ModelParams next = w_prev;
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = fedavg_result.values[i] - w_prev.values[i];
    const double d2 = delta * delta;
    state.m[i] = spec.beta1 * state.m[i] + (1.0 - spec.beta1) * delta;
    const double diff = state.v[i] - d2;
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    state.v[i] = state.v[i] - (1.0 - spec.beta2) * d2 * sign;
    next.values[i] =
        w_prev.values[i] + spec.eta * state.m[i] / (std::sqrt(std::max(state.v[i], floor)) + spec.tau);
  }
  return {std::move(next), std::move(state)};
}

ModelParams ServerAggregator::step(const ModelParams& w_prev,
                                   std::span<const ClientUpdate> updates) {
  ModelParams avg = aggregate_fedavg(updates);
  require_same_shape(w_prev, avg);
  if (std::holds_alternative<FedAvgSpec>(spec_)) return avg;
  if (const auto* m = std::get_if<FedAvgMSpec>(&spec_)) {
    auto [next, state] = server_update_fedavgm(std::move(momentum_), w_prev, avg, *m);
    momentum_ = std::move(state);
    return next;
  }
  auto [next, state] =
      server_update_fedyogi(std::move(yogi_), w_prev, avg, std::get<FedYogiSpec>(spec_));
  yogi_ = std::move(state);
  return next;
}

}  // namespace flowfed::fl
