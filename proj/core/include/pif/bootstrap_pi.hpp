#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pif/burden.hpp"
#include "pif/dataset.hpp"
#include "pif/interval.hpp"
#include "pif/learner.hpp"

namespace pif {

struct BootstrapMember {
  Regressor model;
  BootstrapResample resample;
};

/// B regressors, each trained on the in-bag rows of its own seeded resample.
/// Immutable after training; prediction-time work adds no trainings.
struct BootstrapEnsemble {
  std::vector<BootstrapMember> members;

  std::size_t size() const { return members.size(); }
  std::vector<double> member_predictions(std::span<const double> x) const;
};

BootstrapEnsemble train_ensemble(const LearnerSpec& spec, const Dataset& train, int resamples,
                                 std::uint64_t seed, const Burden& burden = {});

/// Arithmetic mean of the member predictions.
double bagged_prediction(const BootstrapEnsemble& ensemble, std::span<const double> x);

/// Sample variance of the member predictions about the bagged prediction
/// (divisor B - 1); requires B >= 2.
double prediction_variance(const BootstrapEnsemble& ensemble, std::span<const double> x);

/// Mean-squared out-of-bag residual per member with divisor (oob size - 1),
/// averaged over members. Every out-of-bag set must hold at least 2 rows.
double irreducible_error(const BootstrapEnsemble& ensemble, const Dataset& train);

struct PivotComponents {
  double bagged_prediction = 0.0;
  double prediction_variance = 0.0;
  double irreducible_error = 0.0;
  double z_critical = 0.0;
};

PivotComponents pivot_components(const BootstrapEnsemble& ensemble, const Dataset& train,
                                 std::span<const double> x, double alpha);

/// Interval centered at the bagged prediction with half-width
/// z * sqrt(prediction_variance + irreducible_error). The bounds are
/// constructed so that (upper - center) == (center - lower) exactly.
PredictionInterval pivot_interval(const PivotComponents& components, double alpha);

PredictionInterval pivot_pi(const BootstrapEnsemble& ensemble, const Dataset& train,
                            std::span<const double> x, double alpha,
                            PivotComponents* components_out = nullptr);

/// Member predictions shifted by one error drawn uniformly from each member's
/// out-of-bag residuals: values[b] = raw prediction + sampled_errors[b], exactly.
struct AdjustedPredictionSample {
  std::vector<double> values;
  std::vector<double> sampled_errors;
};

AdjustedPredictionSample adjusted_prediction_sample(const BootstrapEnsemble& ensemble,
                                                    const Dataset& train,
                                                    std::span<const double> x,
                                                    std::uint64_t seed);

/// ceil(p * n)-th order statistic, index clamped to [1, n]; the returned value
/// is always an element of `values`.
double empirical_quantile(std::span<const double> values, double p);

PredictionInterval percentile_interval(const AdjustedPredictionSample& sample, double alpha);

/// Requires B >= 20; tail quantiles are unstable until B is well above 1,000.
PredictionInterval percentile_pi(const BootstrapEnsemble& ensemble, const Dataset& train,
                                 std::span<const double> x, double alpha, std::uint64_t seed);

}  // namespace pif
