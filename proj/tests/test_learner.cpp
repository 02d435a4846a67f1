#include <cmath>
#include <vector>

#include "doctest.h"
#include "pif/errors.hpp"
#include "pif/learner.hpp"
#include "pif/mlp.hpp"
#include "pif/rng.hpp"
#include "pif/synthetic.hpp"

using namespace pif;

namespace {

Dataset two_points() { return Dataset({0.0, 1.0}, {0.0, 2.0}, 1); }

// Independent ridge oracle: solve the unpenalized-intercept normal equations
// on the raw (uncentered) design via Gaussian elimination with partial pivoting.
std::vector<double> ridge_oracle(const Dataset& data, double lambda) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  const std::size_t m = d + 1;  // intercept first
  std::vector<double> a(m * m, 0.0);
  std::vector<double> b(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> xi(m, 1.0);
    for (std::size_t c = 0; c < d; ++c) xi[c + 1] = data.row(i)[c];
    for (std::size_t r = 0; r < m; ++r) {
      b[r] += xi[r] * data.target(i);
      for (std::size_t c = 0; c < m; ++c) a[r * m + c] += xi[r] * xi[c];
    }
  }
  for (std::size_t c = 1; c < m; ++c) a[c * m + c] += lambda;  // intercept unpenalized

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::fabs(a[r * m + col]) > std::fabs(a[pivot * m + col])) pivot = r;
    for (std::size_t c = 0; c < m; ++c) std::swap(a[col * m + c], a[pivot * m + c]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double factor = a[r * m + col] / a[col * m + col];
      for (std::size_t c = 0; c < m; ++c) a[r * m + c] -= factor * a[col * m + c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> solution(m);
  for (std::size_t r = 0; r < m; ++r) solution[r] = b[r] / a[r * m + r];
  return solution;  // [intercept, slopes...]
}

}  // namespace

TEST_CASE("ridge with lambda 0 interpolates two points") {
  const Regressor model = fit(LearnerSpec::ridge(0.0), two_points());
  const double x0 = 0.0, x05 = 0.5, x1 = 1.0;
  CHECK(model.predict({&x0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(model.predict({&x1, 1}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(model.predict({&x05, 1}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ridge with huge lambda collapses to the target mean") {
  const Dataset d({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0}, 1);
  const Regressor model = fit(LearnerSpec::ridge(1e12), d);
  const double probe = -10.0;
  CHECK(model.predict({&probe, 1}) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("ridge matches an independent normal-equation solve") {
  Rng rng(404);
  for (double lambda : {0.0, 0.3, 5.0}) {
    std::vector<double> features;
    std::vector<double> targets;
    for (int i = 0; i < 20; ++i) {
      for (int c = 0; c < 5; ++c) features.push_back(rng.uniform(-2.0, 2.0));
      targets.push_back(rng.uniform(-5.0, 5.0));
    }
    const Dataset data(features, targets, 5);
    const auto oracle = ridge_oracle(data, lambda);
    const Regressor model = fit(LearnerSpec::ridge(lambda), data);

    // recover coefficients from predictions: intercept at 0, slope via unit steps
    std::vector<double> zero(5, 0.0);
    const double intercept = model.predict(zero);
    CHECK(std::fabs(intercept - oracle[0]) < 1e-8);
    for (int c = 0; c < 5; ++c) {
      std::vector<double> unit(5, 0.0);
      unit[c] = 1.0;
      CHECK(std::fabs((model.predict(unit) - intercept) - oracle[c + 1]) < 1e-8);
    }
  }
}

TEST_CASE("knn neighbourhood behaviour") {
  const Dataset d({0.0, 1.0, 2.0, 3.0, 10.0}, {1.0, 2.0, 3.0, 4.0, 100.0}, 1);

  const Regressor global = fit(LearnerSpec::knn(5), d);
  const double anywhere = -77.0;
  CHECK(global.predict({&anywhere, 1}) == doctest::Approx(22.0));  // global mean

  const Regressor nearest = fit(LearnerSpec::knn(1), d);
  const double at_train = 2.0;
  CHECK(nearest.predict({&at_train, 1}) == doctest::Approx(3.0));

  CHECK_THROWS_AS(fit(LearnerSpec::knn(6), d), Error);
  const std::vector<double> wrong_dim{1.0, 2.0};
  CHECK_THROWS_AS(nearest.predict(wrong_dim), Error);
}

TEST_CASE("knn ties break toward the lower row index") {
  // two rows at the same feature value with different targets
  const Dataset d({1.0, 1.0, 5.0}, {10.0, 20.0, 30.0}, 1);
  const Regressor model = fit(LearnerSpec::knn(1), d);
  const double x = 1.0;
  CHECK(model.predict({&x, 1}) == doctest::Approx(10.0));
}

TEST_CASE("mlp analytic gradients match central differences") {
  Rng rng(31337);
  MlpNetwork network(3, 1, 2, Activation::tanh);
  Rng init = rng.fork(0);
  network.init_parameters(init);

  const std::size_t n = 8, d = 3;
  std::vector<double> features(n * d);
  std::vector<double> targets(n);
  for (auto& v : features) v = rng.uniform(-1.0, 1.0);
  for (auto& v : targets) v = rng.uniform(-1.0, 1.0);

  std::vector<double> analytic(network.parameter_count());
  network.loss_and_gradient(features.data(), targets.data(), n, d, analytic);

  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const std::size_t i = rng.uniform_index(network.parameter_count());
    const double original = network.parameters()[i];
    const double h = 1e-5 * std::max(1.0, std::fabs(original));
    network.parameters()[i] = original + h;
    const double up = network.loss(features.data(), targets.data(), n, d);
    network.parameters()[i] = original - h;
    const double down = network.loss(features.data(), targets.data(), n, d);
    network.parameters()[i] = original;
    const double fd = (up - down) / (2.0 * h);
    const double rel =
        std::fabs(fd - analytic[i]) / std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-8});
    worst = std::max(worst, rel);
    ++checked;
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam first step moves parameters by about the learning rate") {
  AdamOptimizer adam(2, 0.01);
  std::vector<double> params{0.0, 0.0};
  const std::vector<double> grad{1.0, -2.0};
  adam.step(params, grad);
  CHECK(params[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(params[1] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(adam.steps_taken() == 1);
}

TEST_CASE("mlp training is seed-deterministic and counts its steps") {
  const SyntheticData data = generate({TrendKind::sinusoid, 50, 1, NoiseSpec::gaussian(0.1), 5});
  MlpSpec spec;
  spec.layers = 1;
  spec.nodes_per_layer = 8;
  spec.activation = Activation::tanh;
  spec.epochs = 5;
  spec.batch_size = 16;
  spec.seed = 99;

  const TrainedMlp a = train_mlp(spec, data.data);
  const TrainedMlp b = train_mlp(spec, data.data);
  CHECK(a.adam_steps == 5 * 4);  // epochs * ceil(50 / 16)
  for (double x = 0.0; x <= 1.0; x += 0.1) {
    const std::vector<double> p{x};
    CHECK(a.network.predict(standardize_row(a.stats, p)) ==
          b.network.predict(standardize_row(b.stats, p)));
  }

  spec.seed = 100;
  const TrainedMlp c = train_mlp(spec, data.data);
  const std::vector<double> probe{0.3};
  CHECK(a.network.predict(standardize_row(a.stats, probe)) !=
        c.network.predict(standardize_row(c.stats, probe)));
}

TEST_CASE("mlp learns a noisy sinusoid to low training error") {
  const SyntheticData data = generate({TrendKind::sinusoid, 500, 1, NoiseSpec::gaussian(0.1), 21});
  MlpSpec spec;
  spec.layers = 2;
  spec.nodes_per_layer = 50;
  spec.activation = Activation::relu;
  spec.epochs = 200;
  spec.batch_size = 32;
  spec.learning_rate = 1e-3;
  spec.seed = 7;

  const Regressor model = fit(LearnerSpec::mlp(spec), data.data);
  double ss = 0.0;
  for (std::size_t i = 0; i < data.data.rows(); ++i) {
    const double e = model.predict(data.data.row(i)) - data.data.target(i);
    ss += e * e;
  }
  const double rmse = std::sqrt(ss / static_cast<double>(data.data.rows()));
  CHECK(rmse < 0.2);
}

TEST_CASE("learner spec JSON uses the documented field names") {
  const LearnerSpec ridge = learner_spec_from_json(R"({"kind":"ridge","ridge":{"lambda":0.5}})");
  CHECK(ridge.kind() == LearnerKind::ridge);
  CHECK(ridge.ridge_params().lambda == 0.5);

  const LearnerSpec knn = learner_spec_from_json(R"({"kind":"knn","knn":{"k":3}})");
  CHECK(knn.knn_params().k == 3);

  const LearnerSpec mlp = learner_spec_from_json(
      R"({"kind":"mlp","mlp":{"layers":3,"nodes_per_layer":25,"activation":"tanh",
          "epochs":75,"batch_size":64,"learning_rate":0.01,"seed":9}})");
  CHECK(mlp.mlp_params().layers == 3);
  CHECK(mlp.mlp_params().nodes_per_layer == 25);
  CHECK(mlp.mlp_params().activation == Activation::tanh);
  CHECK(mlp.mlp_params().epochs == 75);
  CHECK(mlp.mlp_params().batch_size == 64);
  CHECK(mlp.mlp_params().learning_rate == 0.01);
  CHECK(mlp.mlp_params().seed == 9);

  // round trip
  const LearnerSpec back = learner_spec_from_json(to_json(mlp));
  CHECK(back.mlp_params().nodes_per_layer == 25);
  CHECK(back.mlp_params().activation == Activation::tanh);

  CHECK_THROWS_AS(learner_spec_from_json(R"({"kind":"forest"})"), ConfigError);
  CHECK_THROWS_AS(learner_spec_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(learner_spec_from_json(R"({"kind":"knn","knn":{"k":0}})"), ConfigError);
}

TEST_CASE("fit rejects invalid mlp settings with the epoch in the message") {
  const SyntheticData data = generate({TrendKind::linear, 30, 2, NoiseSpec::gaussian(1.0), 3});
  MlpSpec spec;
  spec.layers = 1;
  spec.nodes_per_layer = 4;
  spec.epochs = 50;
  spec.learning_rate = 1e200;  // overflows the forward pass after one step
  spec.seed = 1;
  CHECK_THROWS_WITH_AS(fit(LearnerSpec::mlp(spec), data.data), doctest::Contains("epoch"),
                       Error);
}
