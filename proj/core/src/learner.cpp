#include "pif/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "pif/errors.hpp"
#include "pif/mlp.hpp"

namespace pif {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + name + "' (expected relu, tanh or sigmoid)");
}

void LearnerSpec::validate() const {
  switch (kind()) {
    case LearnerKind::ridge:
      if (!(ridge_params().lambda >= 0.0)) throw ConfigError("ridge: lambda must be >= 0");
      break;
    case LearnerKind::knn:
      if (knn_params().k < 1) throw ConfigError("knn: k must be >= 1");
      break;
    case LearnerKind::mlp: {
      const auto& m = mlp_params();
      if (m.layers < 1) throw ConfigError("mlp: layers must be >= 1");
      if (m.nodes_per_layer < 1) throw ConfigError("mlp: nodes_per_layer must be >= 1");
      if (m.epochs < 1) throw ConfigError("mlp: epochs must be >= 1");
      if (m.batch_size < 1) throw ConfigError("mlp: batch_size must be >= 1");
      if (!(m.learning_rate > 0.0)) throw ConfigError("mlp: learning_rate must be > 0");
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Trained models

namespace {

struct RidgeModel {
  std::vector<double> coefficients;  // slope per feature
  double intercept = 0.0;

  double predict(std::span<const double> x) const {
    double y = intercept;
    for (std::size_t i = 0; i < coefficients.size(); ++i) y += coefficients[i] * x[i];
    return y;
  }
};

struct KnnModel {
  ColumnStats stats;
  std::vector<double> features;  // standardized, row-major
  std::vector<double> targets;
  std::size_t cols = 0;
  int k = 1;

  double predict(std::span<const double> x) const {
    const std::vector<double> z = standardize_row(stats, x);
    const std::size_t n = targets.size();
    std::vector<std::pair<double, std::size_t>> distance(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      const double* row = features.data() + i * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        const double dv = row[c] - z[c];
        d2 += dv * dv;
      }
      distance[i] = {d2, i};
    }
    // pair ordering breaks distance ties toward the lower row index
    const std::size_t kk = static_cast<std::size_t>(k);
    std::partial_sort(distance.begin(), distance.begin() + kk, distance.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < kk; ++i) sum += targets[distance[i].second];
    return sum / static_cast<double>(kk);
  }
};

struct MlpModel {
  TrainedMlp trained;

  double predict(std::span<const double> x) const {
    return trained.network.predict(standardize_row(trained.stats, x));
  }
};

// Solves A x = b for symmetric positive definite A (in-place Cholesky).
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (!(diag > 0.0))
      throw Error("ridge: normal equations are singular; increase lambda");
    diag = std::sqrt(diag);
    a[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / diag;
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
    b[i] = v / a[i * n + i];
  }
  return b;
}

RidgeModel fit_ridge(const RidgeSpec& spec, const Dataset& train) {
  if (!(spec.lambda >= 0.0)) throw Error("ridge: lambda must be >= 0");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();

  // Centering makes the intercept unpenalized: solve (Xc'Xc + lambda I) b = Xc'yc.
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t c = 0; c < d; ++c) mean[c] += r[c];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  const double target_mean =
      std::accumulate(train.targets().begin(), train.targets().end(), 0.0) /
      static_cast<double>(n);

  std::vector<double> gram(d * d, 0.0);
  std::vector<double> rhs(d, 0.0);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t c = 0; c < d; ++c) centered[c] = r[c] - mean[c];
    const double yc = train.target(i) - target_mean;
    for (std::size_t a = 0; a < d; ++a) {
      rhs[a] += centered[a] * yc;
      for (std::size_t b = a; b < d; ++b) gram[a * d + b] += centered[a] * centered[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    gram[a * d + a] += spec.lambda;
    for (std::size_t b = 0; b < a; ++b) gram[a * d + b] = gram[b * d + a];
  }

  RidgeModel model;
  model.coefficients = solve_spd(std::move(gram), std::move(rhs), d);
  model.intercept = target_mean;
  for (std::size_t c = 0; c < d; ++c) model.intercept -= model.coefficients[c] * mean[c];
  return model;
}

KnnModel fit_knn(const KnnSpec& spec, const Dataset& train) {
  if (spec.k < 1) throw Error("knn: k must be >= 1");
  if (static_cast<std::size_t>(spec.k) > train.rows())
    throw Error("knn: k exceeds the number of training rows");
  KnnModel model;
  model.stats = fit_column_stats(train);
  const Dataset scaled = standardize(model.stats, train);
  model.features = scaled.features();
  model.targets = scaled.targets();
  model.cols = scaled.cols();
  model.k = spec.k;
  return model;
}

}  // namespace

struct Regressor::Impl {
  LearnerSpec spec;
  std::size_t training_rows = 0;
  std::variant<RidgeModel, KnnModel, MlpModel> model;
};

double Regressor::predict(std::span<const double> x) const {
  const std::size_t expected =
      std::visit([](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RidgeModel>) return m.coefficients.size();
        else if constexpr (std::is_same_v<T, KnnModel>) return m.cols;
        else return m.trained.network.input_dim();
      }, impl_->model);
  if (x.size() != expected) throw Error("Regressor::predict: feature dimension mismatch");
  return std::visit([&](const auto& m) { return m.predict(x); }, impl_->model);
}

std::vector<double> Regressor::predict_all(const Dataset& data) const {
  std::vector<double> out(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out[i] = predict(data.row(i));
  return out;
}

const LearnerSpec& Regressor::spec() const { return impl_->spec; }
std::size_t Regressor::training_row_count() const { return impl_->training_rows; }

Regressor fit(const LearnerSpec& spec, const Dataset& train) {
  if (train.rows() == 0) throw Error("fit: empty training set");
  auto impl = std::make_shared<Regressor::Impl>();
  impl->spec = spec;
  impl->training_rows = train.rows();
  switch (spec.kind()) {
    case LearnerKind::ridge:
      impl->model = fit_ridge(spec.ridge_params(), train);
      break;
    case LearnerKind::knn:
      impl->model = fit_knn(spec.knn_params(), train);
      break;
    case LearnerKind::mlp:
      impl->model = MlpModel{train_mlp(spec.mlp_params(), train)};
      break;
  }
  return Regressor(std::move(impl));
}

LearnerSpec reseeded(const LearnerSpec& spec, std::uint64_t seed) {
  LearnerSpec out = spec;
  if (out.kind() == LearnerKind::mlp) std::get<MlpSpec>(out.params).seed = seed;
  return out;
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const LearnerSpec& spec) {
  nlohmann::json j;
  switch (spec.kind()) {
    case LearnerKind::ridge:
      j["kind"] = "ridge";
      j["ridge"] = {{"lambda", spec.ridge_params().lambda}};
      break;
    case LearnerKind::knn:
      j["kind"] = "knn";
      j["knn"] = {{"k", spec.knn_params().k}};
      break;
    case LearnerKind::mlp: {
      const auto& m = spec.mlp_params();
      j["kind"] = "mlp";
      j["mlp"] = {{"layers", m.layers},
                  {"nodes_per_layer", m.nodes_per_layer},
                  {"activation", to_string(m.activation)},
                  {"epochs", m.epochs},
                  {"batch_size", m.batch_size},
                  {"learning_rate", m.learning_rate},
                  {"seed", m.seed}};
      break;
    }
  }
  return j.dump();
}

namespace detail {

LearnerSpec learner_spec_from_json_value(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("learner: expected an object with a 'kind' field");
  const std::string kind = j.at("kind").get<std::string>();
  LearnerSpec spec;
  if (kind == "ridge") {
    RidgeSpec r;
    if (j.contains("ridge")) r.lambda = j.at("ridge").value("lambda", r.lambda);
    spec.params = r;
  } else if (kind == "knn") {
    KnnSpec k;
    if (j.contains("knn")) k.k = j.at("knn").value("k", k.k);
    spec.params = k;
  } else if (kind == "mlp") {
    MlpSpec m;
    if (j.contains("mlp")) {
      const auto& b = j.at("mlp");
      m.layers = b.value("layers", m.layers);
      m.nodes_per_layer = b.value("nodes_per_layer", m.nodes_per_layer);
      if (b.contains("activation"))
        m.activation = activation_from_string(b.at("activation").get<std::string>());
      m.epochs = b.value("epochs", m.epochs);
      m.batch_size = b.value("batch_size", m.batch_size);
      m.learning_rate = b.value("learning_rate", m.learning_rate);
      m.seed = b.value("seed", m.seed);
    }
    spec.params = m;
  } else {
    throw ConfigError("learner: unknown kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

}  // namespace detail

LearnerSpec learner_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("learner: invalid JSON: ") + e.what());
  }
  return detail::learner_spec_from_json_value(j);
}

}  // namespace pif
