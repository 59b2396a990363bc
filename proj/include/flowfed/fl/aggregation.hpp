#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "flowfed/fl/model.hpp"

namespace flowfed::fl {

struct FedAvgSpec {
  bool operator==(const FedAvgSpec&) const = default;
};

/// Server momentum on the pseudo-gradient.
struct FedAvgMSpec {
  double server_lr = 1.0;
  double beta = 0.9;
  bool operator==(const FedAvgMSpec&) const = default;
};

/// Adaptive server step with Yogi's sign-corrected second moment.
struct FedYogiSpec {
  double eta = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double tau = 1e-3;
  bool operator==(const FedYogiSpec&) const = default;
};

using AggregatorSpec = std::variant<FedAvgSpec, FedAvgMSpec, FedYogiSpec>;

const char* aggregator_name(const AggregatorSpec& spec) noexcept;

struct ClientUpdate {
  ModelParams params;
  std::size_t n_samples = 0;
};

/// Sample-weighted mean, elementwise. Throws ShapeMismatch.
ModelParams aggregate_fedavg(std::span<const ClientUpdate> updates);

struct MomentumState {
  std::vector<double> m;
};

struct YogiState {
  std::vector<double> m;
  std::vector<double> v;
};

/// delta = w_prev - avg; m = beta*m + delta; w = w_prev - server_lr*m.
std::pair<ModelParams, MomentumState> server_update_fedavgm(MomentumState state,
                                                            const ModelParams& w_prev,
                                                            const ModelParams& fedavg_result,
                                                            const FedAvgMSpec& spec);

/// delta = avg - w_prev; m = b1*m + (1-b1)*delta;
/// v = v - (1-b2)*delta²*sign(v - delta²); w = w_prev + eta*m/(sqrt(v)+tau),
/// with v floored at tau² inside the square root.
std::pair<ModelParams, YogiState> server_update_fedyogi(YogiState state,
                                                        const ModelParams& w_prev,
                                                        const ModelParams& fedavg_result,
                                                        const FedYogiSpec& spec);

/// Holds the server-side optimizer state across rounds.
class ServerAggregator {
 public:
  explicit ServerAggregator(AggregatorSpec spec) : spec_(std::move(spec)) {}

  ModelParams step(const ModelParams& w_prev, std::span<const ClientUpdate> updates);
  const AggregatorSpec& spec() const noexcept { return spec_; }

 private:
  AggregatorSpec spec_;
  MomentumState momentum_;
  YogiState yogi_;
};

}  // namespace flowfed::fl
