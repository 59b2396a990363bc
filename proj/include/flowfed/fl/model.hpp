#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowfed/fl/dataset.hpp"

namespace flowfed::fl {

enum class ModelKind { Logistic, Mlp };

/// Multinomial logistic regression, or a one-hidden-layer tanh MLP.
struct ModelSpec {
  ModelKind kind = ModelKind::Logistic;
  std::size_t hidden = 32;  // Mlp only
  bool operator==(const ModelSpec&) const = default;
};

/// Flat parameter vector. layer_dims is {dim, classes} for the logistic
/// model and {dim, hidden, classes} for the MLP; weights precede biases in
/// each layer, weights row-major [out][in].
struct ModelParams {
  std::vector<double> values;
  std::vector<std::size_t> layer_dims;

  std::size_t count() const noexcept { return values.size(); }
  /// Single-precision payload plus a fixed 1 KiB envelope.
  std::size_t wire_bytes() const noexcept { return 4 * values.size() + 1024; }
  bool all_finite() const noexcept;
  bool operator==(const ModelParams&) const = default;
};

/// Logistic starts at zero; the MLP draws scaled Gaussian weights from `seed`.
ModelParams init_params(const ModelSpec& spec, std::size_t dim, int n_classes,
                        std::uint64_t seed);

/// Mean cross-entropy over `rows`. When `grad` is non-null it is resized and
/// filled with the gradient of that mean.
double cross_entropy(const ModelParams& params, const Dataset& data,
                     std::span<const std::size_t> rows, std::vector<double>* grad);

/// (mu/2)·||w - anchor||² and its gradient mu·(w - anchor), added into grad.
double proximal_penalty(std::span<const double> w, std::span<const double> anchor,
                        double mu);
void add_proximal_gradient(std::span<const double> w, std::span<const double> anchor,
                           double mu, std::span<double> grad);

struct TrainConfig {
  int local_epochs = 1;
  std::size_t batch_size = 32;
  double lr = 0.1;
  double mu = 0.0;  // FedProx proximal coefficient; 0 is plain SGD
  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  ModelParams params;
  double final_loss = 0.0;  // mean cross-entropy on the client slice
};

/// Mini-batch SGD over `rows` (reshuffled each epoch; last partial batch
/// kept). Throws NumericalDivergenceError on a non-finite batch loss.
TrainResult local_train(const ModelParams& global, const Dataset& data,
                        std::span<const std::size_t> rows, const TrainConfig& cfg,
                        std::uint64_t seed);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and argmax accuracy; ties go to the smallest class id.
Evaluation evaluate(const ModelParams& params, const Dataset& data);

}  // namespace flowfed::fl
