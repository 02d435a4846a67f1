#include "pif/bootstrap_pi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pif/errors.hpp"
#include "pif/normal.hpp"
#include "pif/rng.hpp"

namespace pif {

std::vector<double> BootstrapEnsemble::member_predictions(std::span<const double> x) const {
  std::vector<double> predictions(members.size());
  for (std::size_t b = 0; b < members.size(); ++b)
    predictions[b] = members[b].model.predict(x);
  return predictions;
}

BootstrapEnsemble train_ensemble(const LearnerSpec& spec, const Dataset& train, int resamples,
                                 std::uint64_t seed, const Burden& burden) {
  if (resamples < 2) throw Error("train_ensemble: needs at least 2 resamples");
  if (train.rows() < 2) throw Error("train_ensemble: needs at least 2 training rows");

  BootstrapEnsemble ensemble;
  ensemble.members.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    const std::uint64_t member_seed = fork_seed(seed, static_cast<std::uint64_t>(b));
    BootstrapResample resample = bootstrap_resample(train.rows(), member_seed);
    const Dataset in_bag = train.subset(resample.in_bag);
    try {
      Regressor model = fit(reseeded(spec, fork_seed(member_seed, 1)), in_bag);
      burden.add();
      ensemble.members.push_back({std::move(model), std::move(resample)});
    } catch (const Error& e) {
      throw Error("train_ensemble: member " + std::to_string(b) + ": " + e.what());
    }
  }
  return ensemble;
}

double bagged_prediction(const BootstrapEnsemble& ensemble, std::span<const double> x) {
  if (ensemble.members.empty()) throw Error("bagged_prediction: empty ensemble");
  double sum = 0.0;
  for (const auto& member : ensemble.members) sum += member.model.predict(x);
  return sum / static_cast<double>(ensemble.size());
}

double prediction_variance(const BootstrapEnsemble& ensemble, std::span<const double> x) {
  const std::size_t count = ensemble.size();
  if (count < 2) throw Error("prediction_variance: needs at least 2 members");
  const std::vector<double> predictions = ensemble.member_predictions(x);
  const double center =
      std::accumulate(predictions.begin(), predictions.end(), 0.0) / static_cast<double>(count);
  double sum = 0.0;
  for (double p : predictions) sum += (p - center) * (p - center);
  return sum / static_cast<double>(count - 1);
}

double irreducible_error(const BootstrapEnsemble& ensemble, const Dataset& train) {
  if (ensemble.members.empty()) throw Error("irreducible_error: empty ensemble");
  double total = 0.0;
  for (std::size_t b = 0; b < ensemble.size(); ++b) {
    const auto& member = ensemble.members[b];
    const auto& oob = member.resample.out_of_bag;
    // Residuals are taken on the out-of-bag rows only; scoring the in-bag rows
    // with the model trained on them would understate the noise for any
    // near-interpolating learner. The divisor is (oob size - 1), hence >= 2 rows.
    if (oob.size() < 2)
      throw Error("irreducible_error: member " + std::to_string(b) +
                  " has an out-of-bag set smaller than 2 rows");
    double sum = 0.0;
    for (std::size_t i : oob) {
      const double r = train.target(i) - member.model.predict(train.row(i));
      sum += r * r;
    }
    total += sum / static_cast<double>(oob.size() - 1);
  }
  return total / static_cast<double>(ensemble.size());
}

PivotComponents pivot_components(const BootstrapEnsemble& ensemble, const Dataset& train,
                                 std::span<const double> x, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("pivot_components: alpha must lie in (0, 1)");
  PivotComponents c;
  c.bagged_prediction = bagged_prediction(ensemble, x);
  c.prediction_variance = prediction_variance(ensemble, x);
  c.irreducible_error = irreducible_error(ensemble, train);
  c.z_critical = normal_quantile(1.0 - alpha / 2.0);
  return c;
}

PredictionInterval pivot_interval(const PivotComponents& components, double alpha) {
  if (!(components.prediction_variance >= 0.0) || !(components.irreducible_error >= 0.0))
    throw Error("pivot_interval: variance components must be non-negative");
  const double center = components.bagged_prediction;
  const double half =
      components.z_critical * std::sqrt(components.prediction_variance +
                                        components.irreducible_error);
  PredictionInterval interval;
  interval.level = 1.0 - alpha;
  // Round the half-width through the wider-magnitude bound first so that
  // (upper - center) and (center - lower) come out bit-identical.
  if (center >= 0.0) {
    interval.upper = center + half;
    interval.lower = center - (interval.upper - center);
  } else {
    interval.lower = center - half;
    interval.upper = center + (center - interval.lower);
  }
  return interval;
}

PredictionInterval pivot_pi(const BootstrapEnsemble& ensemble, const Dataset& train,
                            std::span<const double> x, double alpha,
                            PivotComponents* components_out) {
  const PivotComponents components = pivot_components(ensemble, train, x, alpha);
  if (components_out != nullptr) *components_out = components;
  return pivot_interval(components, alpha);
}

AdjustedPredictionSample adjusted_prediction_sample(const BootstrapEnsemble& ensemble,
                                                    const Dataset& train,
                                                    std::span<const double> x,
                                                    std::uint64_t seed) {
  AdjustedPredictionSample sample;
  sample.values.reserve(ensemble.size());
  sample.sampled_errors.reserve(ensemble.size());
  for (std::size_t b = 0; b < ensemble.size(); ++b) {
    const auto& member = ensemble.members[b];
    const auto& oob = member.resample.out_of_bag;
    if (oob.empty())
      throw Error("adjusted_prediction_sample: member " + std::to_string(b) +
                  " has an empty out-of-bag set");
    Rng rng(fork_seed(seed, static_cast<std::uint64_t>(b)));
    const std::size_t pick = oob[rng.uniform_index(oob.size())];
    const double error = train.target(pick) - member.model.predict(train.row(pick));
    const double prediction = member.model.predict(x);
    const double value = prediction + error;
    // store the realized difference so value - sampled_error recovers the raw
    // prediction exactly
    sample.sampled_errors.push_back(value - prediction);
    sample.values.push_back(value);
  }
  return sample;
}

double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error("empirical_quantile: empty sample");
  const long n = static_cast<long>(values.size());
  long rank = static_cast<long>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp(rank, 1L, n);
  std::vector<double> sorted(values.begin(), values.end());
  std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
  return sorted[static_cast<std::size_t>(rank - 1)];
}

PredictionInterval percentile_interval(const AdjustedPredictionSample& sample, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("percentile_interval: alpha must lie in (0, 1)");
  if (sample.values.empty()) throw Error("percentile_interval: empty sample");
  PredictionInterval interval;
  interval.level = 1.0 - alpha;
  interval.lower = empirical_quantile(sample.values, alpha / 2.0);
  interval.upper = empirical_quantile(sample.values, 1.0 - alpha / 2.0);
  return interval;
}

PredictionInterval percentile_pi(const BootstrapEnsemble& ensemble, const Dataset& train,
                                 std::span<const double> x, double alpha, std::uint64_t seed) {
  if (ensemble.size() < 20)
    throw Error("percentile_pi: needs at least 20 resamples for tail quantiles");
  return percentile_interval(adjusted_prediction_sample(ensemble, train, x, seed), alpha);
}

}  // namespace pif
