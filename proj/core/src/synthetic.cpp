#include "pif/synthetic.hpp"

#include <cmath>

#include "pif/errors.hpp"
#include "pif/rng.hpp"

namespace pif {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double draw_noise(const NoiseSpec& noise, Rng& rng) {
  switch (noise.kind) {
    case NoiseKind::gaussian:
      return noise.param * rng.normal();
    case NoiseKind::skewed:
      // exponential shifted to mean zero keeps the skew without a bias
      return rng.exponential(noise.param) - noise.param;
    case NoiseKind::bimodal: {
      // modes at +-gap/2 with component sd gap/8, so the trough at zero is deep
      const double mode = (rng.uniform() < 0.5 ? -0.5 : 0.5) * noise.param;
      return mode + 0.125 * noise.param * rng.normal();
    }
  }
  return 0.0;
}

}  // namespace

SyntheticData generate(const GeneratorSpec& spec) {
  if (spec.n < 10) throw Error("generate: n must be >= 10");
  if (spec.d < 1) throw Error("generate: d must be >= 1");
  if (spec.kind == TrendKind::friedman && spec.d < 5)
    throw Error("generate: the friedman trend needs d >= 5");
  if (!(spec.noise.param >= 0.0)) throw Error("generate: noise parameter must be >= 0");

  Rng weight_rng = Rng(spec.seed).fork(0);
  Rng feature_rng = Rng(spec.seed).fork(1);
  Rng noise_rng = Rng(spec.seed).fork(2);

  // Fixed linear map drawn once per spec so the ground truth is reproducible.
  std::vector<double> weights(spec.d, 0.0);
  double bias = 0.0;
  if (spec.kind == TrendKind::linear) {
    for (double& w : weights) w = weight_rng.uniform(-2.0, 2.0);
    bias = weight_rng.uniform(-1.0, 1.0);
  }

  std::vector<double> features;
  features.reserve(spec.n * spec.d);
  std::vector<double> targets(spec.n);
  std::vector<double> truth(spec.n);
  std::vector<double> x(spec.d);

  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t c = 0; c < spec.d; ++c) {
      x[c] = spec.kind == TrendKind::linear ? feature_rng.uniform(-1.0, 1.0)
                                            : feature_rng.uniform(0.0, 1.0);
      features.push_back(x[c]);
    }
    double f = 0.0;
    switch (spec.kind) {
      case TrendKind::linear:
        f = bias;
        for (std::size_t c = 0; c < spec.d; ++c) f += weights[c] * x[c];
        break;
      case TrendKind::sinusoid:
        f = std::sin(kTwoPi * x[0]);
        break;
      case TrendKind::friedman:
        f = 10.0 * std::sin(3.14159265358979323846 * x[0] * x[1]) +
            20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4];
        break;
    }
    truth[i] = f;
    targets[i] = f + draw_noise(spec.noise, noise_rng);
  }

  return SyntheticData{Dataset(std::move(features), std::move(targets), spec.d), std::move(truth)};
}

}  // namespace pif
