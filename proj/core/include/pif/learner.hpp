#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pif/dataset.hpp"

namespace pif {

enum class Activation { relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Ridge regression with an unpenalized intercept; lambda = 0 is ordinary
/// least squares.
struct RidgeSpec {
  double lambda = 1.0;
};

/// k-nearest-neighbour mean with Euclidean distance on z-scored features;
/// distance ties break toward the lower row index.
struct KnnSpec {
  int k = 5;
};

/// Fully-connected network, `layers` hidden layers of `nodes_per_layer` units
/// each and a linear output, trained with Adam under mean-squared-error loss.
struct MlpSpec {
  int layers = 2;
  int nodes_per_layer = 50;
  Activation activation = Activation::relu;
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

enum class LearnerKind { ridge, knn, mlp };

struct LearnerSpec {
  std::variant<RidgeSpec, KnnSpec, MlpSpec> params = RidgeSpec{};

  LearnerKind kind() const {
    return static_cast<LearnerKind>(params.index());
  }
  const RidgeSpec& ridge_params() const { return std::get<RidgeSpec>(params); }
  const KnnSpec& knn_params() const { return std::get<KnnSpec>(params); }
  const MlpSpec& mlp_params() const { return std::get<MlpSpec>(params); }

  static LearnerSpec ridge(double lambda) { return {RidgeSpec{lambda}}; }
  static LearnerSpec knn(int k) { return {KnnSpec{k}}; }
  static LearnerSpec mlp(MlpSpec spec) { return {spec}; }

  void validate() const;
};

/// JSON (de)serialization of the configuration block used by the CLI.
std::string to_json(const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const std::string& text);

/// Trained predictor. Immutable after fit; cheap to copy and safe to share
/// across threads.
class Regressor {
 public:
  double predict(std::span<const double> x) const;
  std::vector<double> predict_all(const Dataset& data) const;

  const LearnerSpec& spec() const;
  std::size_t training_row_count() const;

  struct Impl;
  explicit Regressor(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Train a regressor. For MLPs this runs exactly epochs * ceil(n / batch_size)
/// Adam steps (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
Regressor fit(const LearnerSpec& spec, const Dataset& train);

/// Copy of `spec` with the MLP seed replaced; other learners are returned
/// unchanged. Used to give ensemble members independent substreams.
LearnerSpec reseeded(const LearnerSpec& spec, std::uint64_t seed);

}  // namespace pif
