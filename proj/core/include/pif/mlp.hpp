#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pif/learner.hpp"
#include "pif/rng.hpp"

namespace pif {

/// The bare network: flat parameter vector, forward pass, and analytic
/// mean-squared-error gradient. Exposed separately from the Regressor wrapper
/// so gradients can be checked against finite differences.
class MlpNetwork {
 public:
  MlpNetwork(std::size_t input_dim, int hidden_layers, int nodes_per_layer, Activation act);

  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Uniform init scaled by fan-in (fan-in + fan-out for tanh/sigmoid); biases zero.
  void init_parameters(Rng& rng);

  double predict(std::span<const double> x) const;

  /// MSE over `rows` rows of a row-major feature block. Returns the loss and
  /// writes the parameter gradient (same layout as parameters()) into grad.
  double loss_and_gradient(const double* features, const double* targets, std::size_t rows,
                           std::size_t stride, std::span<double> grad) const;
  double loss(const double* features, const double* targets, std::size_t rows,
              std::size_t stride) const;

  std::size_t input_dim() const { return input_dim_; }

 private:
  struct LayerShape {
    std::size_t in, out;
    std::size_t weight_offset, bias_offset;
  };

  std::size_t input_dim_;
  int hidden_layers_;
  int nodes_;
  Activation activation_;
  std::vector<LayerShape> shapes_;  // hidden layers then the linear output
  std::vector<double> params_;
};

/// Adam with bias correction; step counts from 1.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t parameter_count, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  long steps_taken() const { return steps_; }

 private:
  double learning_rate_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long steps_ = 0;
};

/// Full training loop used by fit(); exposed for tests that need the trained
/// network, its standardizer, or the exact step count
/// (= epochs * ceil(n / batch_size)).
struct TrainedMlp {
  ColumnStats stats;
  MlpNetwork network;
  long adam_steps = 0;
};
TrainedMlp train_mlp(const MlpSpec& spec, const Dataset& train);

}  // namespace pif
