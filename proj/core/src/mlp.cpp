#include "pif/mlp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "pif/errors.hpp"

namespace pif {

namespace {

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative expressed through the activation value.
inline double activate_grad(Activation a, double value) {
  switch (a) {
    case Activation::relu: return value > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - value * value;
    case Activation::sigmoid: return value * (1.0 - value);
  }
  return 1.0;
}

}  // namespace

MlpNetwork::MlpNetwork(std::size_t input_dim, int hidden_layers, int nodes_per_layer,
                       Activation act)
    : input_dim_(input_dim), hidden_layers_(hidden_layers), nodes_(nodes_per_layer),
      activation_(act) {
  if (input_dim == 0) throw Error("MlpNetwork: input dimension must be >= 1");
  if (hidden_layers < 1) throw Error("MlpNetwork: needs at least one hidden layer");
  if (nodes_per_layer < 1) throw Error("MlpNetwork: needs at least one node per layer");

  std::size_t offset = 0;
  std::size_t in = input_dim;
  for (int l = 0; l < hidden_layers; ++l) {
    const std::size_t out = static_cast<std::size_t>(nodes_per_layer);
    shapes_.push_back({in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  }
  shapes_.push_back({in, 1, offset, offset + in});  // linear output
  offset += in + 1;
  params_.assign(offset, 0.0);
}

void MlpNetwork::init_parameters(Rng& rng) {
  for (const auto& s : shapes_) {
    const double fan_in = static_cast<double>(s.in);
    const double fan_out = static_cast<double>(s.out);
    const double limit = activation_ == Activation::relu
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < s.in * s.out; ++i)
      params_[s.weight_offset + i] = rng.uniform(-limit, limit);
    for (std::size_t i = 0; i < s.out; ++i) params_[s.bias_offset + i] = 0.0;
  }
}

double MlpNetwork::predict(std::span<const double> x) const {
  if (x.size() != input_dim_) throw Error("MlpNetwork::predict: dimension mismatch");
  std::vector<double> current(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t layer = 0; layer < shapes_.size(); ++layer) {
    const auto& s = shapes_[layer];
    const bool output_layer = layer + 1 == shapes_.size();
    next.assign(s.out, 0.0);
    for (std::size_t j = 0; j < s.out; ++j) {
      double z = params_[s.bias_offset + j];
      const double* w = params_.data() + s.weight_offset + j * s.in;
      for (std::size_t i = 0; i < s.in; ++i) z += w[i] * current[i];
      next[j] = output_layer ? z : activate(activation_, z);
    }
    current.swap(next);
  }
  return current[0];
}

double MlpNetwork::loss_and_gradient(const double* features, const double* targets,
                                     std::size_t rows, std::size_t stride,
                                     std::span<double> grad) const {
  if (grad.size() != params_.size())
    throw Error("MlpNetwork::loss_and_gradient: gradient buffer size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);

  // Per-row activations: activations[0] is the input, activations[l+1] the
  // output of layer l.
  std::vector<std::vector<double>> activations(shapes_.size() + 1);
  std::vector<double> delta, delta_prev;

  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = features + r * stride;
    activations[0].assign(x, x + input_dim_);
    for (std::size_t layer = 0; layer < shapes_.size(); ++layer) {
      const auto& s = shapes_[layer];
      const bool output_layer = layer + 1 == shapes_.size();
      auto& out = activations[layer + 1];
      out.assign(s.out, 0.0);
      const auto& in = activations[layer];
      for (std::size_t j = 0; j < s.out; ++j) {
        double z = params_[s.bias_offset + j];
        const double* w = params_.data() + s.weight_offset + j * s.in;
        for (std::size_t i = 0; i < s.in; ++i) z += w[i] * in[i];
        out[j] = output_layer ? z : activate(activation_, z);
      }
    }

    const double prediction = activations.back()[0];
    const double residual = prediction - targets[r];
    loss += residual * residual;

    // Backward; d(loss_row)/d(pred) = 2 * residual / rows.
    delta.assign(1, 2.0 * residual / static_cast<double>(rows));
    for (std::size_t layer = shapes_.size(); layer-- > 0;) {
      const auto& s = shapes_[layer];
      const auto& in = activations[layer];
      double* wgrad = grad.data() + s.weight_offset;
      double* bgrad = grad.data() + s.bias_offset;
      for (std::size_t j = 0; j < s.out; ++j) {
        const double dj = delta[j];
        bgrad[j] += dj;
        double* wg = wgrad + j * s.in;
        for (std::size_t i = 0; i < s.in; ++i) wg[i] += dj * in[i];
      }
      if (layer == 0) break;
      const auto& prev = shapes_[layer - 1];
      delta_prev.assign(prev.out, 0.0);
      for (std::size_t j = 0; j < s.out; ++j) {
        const double dj = delta[j];
        const double* w = params_.data() + s.weight_offset + j * s.in;
        for (std::size_t i = 0; i < s.in; ++i) delta_prev[i] += dj * w[i];
      }
      for (std::size_t i = 0; i < prev.out; ++i)
        delta_prev[i] *= activate_grad(activation_, in[i]);
      delta.swap(delta_prev);
    }
  }
  return loss / static_cast<double>(rows);
}

double MlpNetwork::loss(const double* features, const double* targets, std::size_t rows,
                        std::size_t stride) const {
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double residual = predict({features + r * stride, input_dim_}) - targets[r];
    loss += residual * residual;
  }
  return loss / static_cast<double>(rows);
}

AdamOptimizer::AdamOptimizer(std::size_t parameter_count, double learning_rate, double beta1,
                             double beta2, double eps)
    : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw Error("AdamOptimizer::step: size mismatch");
  ++steps_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

TrainedMlp train_mlp(const MlpSpec& spec, const Dataset& train) {
  if (spec.epochs < 1) throw Error("train_mlp: epochs must be >= 1");
  if (spec.batch_size < 1) throw Error("train_mlp: batch_size must be >= 1");
  if (!(spec.learning_rate > 0.0)) throw Error("train_mlp: learning_rate must be > 0");

  // Features are z-scored on the training rows; targets are left as-is.
  ColumnStats stats = fit_column_stats(train);
  Dataset scaled = standardize(stats, train);

  MlpNetwork network(train.cols(), spec.layers, spec.nodes_per_layer, spec.activation);
  Rng init_rng = Rng(spec.seed).fork(0);
  Rng shuffle_rng = Rng(spec.seed).fork(1);
  network.init_parameters(init_rng);

  AdamOptimizer adam(network.parameter_count(), spec.learning_rate);
  const std::size_t n = scaled.rows();
  const std::size_t d = scaled.cols();
  const std::size_t batch = static_cast<std::size_t>(spec.batch_size);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> batch_features(batch * d);
  std::vector<double> batch_targets(batch);
  std::vector<double> grad(network.parameter_count());

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      for (std::size_t b = 0; b < count; ++b) {
        const auto row = scaled.row(order[start + b]);
        std::copy(row.begin(), row.end(), batch_features.begin() + b * d);
        batch_targets[b] = scaled.target(order[start + b]);
      }
      const double loss = network.loss_and_gradient(batch_features.data(), batch_targets.data(),
                                                    count, d, grad);
      if (!std::isfinite(loss))
        throw Error("train_mlp: non-finite loss at epoch " + std::to_string(epoch) +
                    "; lower the learning rate");
      adam.step(network.parameters(), grad);
    }
  }
  return TrainedMlp{std::move(stats), std::move(network), adam.steps_taken()};
}

}  // namespace pif
