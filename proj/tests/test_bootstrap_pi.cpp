#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "pif/bootstrap_pi.hpp"
#include "pif/errors.hpp"
#include "pif/normal.hpp"
#include "pif/rng.hpp"
#include "pif/synthetic.hpp"

using namespace pif;

namespace {

// A regressor that predicts `value` everywhere: 1-NN on a single-row dataset.
Regressor constant_model(double value) {
  return fit(LearnerSpec::knn(1), Dataset({0.0}, {value}, 1));
}

BootstrapEnsemble constant_ensemble(const std::vector<double>& predictions) {
  BootstrapEnsemble ensemble;
  for (double p : predictions)
    ensemble.members.push_back({constant_model(p), BootstrapResample{}});
  return ensemble;
}

const std::vector<double> kProbe{0.0};

}  // namespace

TEST_CASE("train_ensemble bookkeeping, determinism and burden") {
  const SyntheticData data = generate({TrendKind::linear, 40, 2, NoiseSpec::gaussian(0.5), 8});
  BurdenLedger ledger;
  const BootstrapEnsemble ensemble =
      train_ensemble(LearnerSpec::ridge(0.1), data.data, 50, 424242, {&ledger, "pivot"});
  CHECK(ensemble.size() == 50);
  CHECK(ledger.trainings("pivot") == 50);

  for (const auto& member : ensemble.members) {
    CHECK(member.resample.in_bag.size() == 40);
    std::set<std::size_t> in(member.resample.in_bag.begin(), member.resample.in_bag.end());
    std::set<std::size_t> all = in;
    for (std::size_t i : member.resample.out_of_bag) {
      CHECK(in.count(i) == 0);
      all.insert(i);
    }
    CHECK(all.size() == 40);
    CHECK_FALSE(member.resample.out_of_bag.empty());
  }

  const BootstrapEnsemble again =
      train_ensemble(LearnerSpec::ridge(0.1), data.data, 50, 424242, {});
  const std::vector<double> x{0.25, -0.5};
  CHECK(ensemble.member_predictions(x) == again.member_predictions(x));

  CHECK_THROWS_AS(train_ensemble(LearnerSpec::ridge(0.1), data.data, 1, 1), Error);
}

TEST_CASE("smallest legal ensemble on four rows") {
  const Dataset tiny({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 2.0, 3.0}, 1);
  const BootstrapEnsemble ensemble = train_ensemble(LearnerSpec::ridge(1.0), tiny, 2, 5);
  CHECK(ensemble.size() == 2);
}

TEST_CASE("bagged prediction is the member mean") {
  CHECK(bagged_prediction(constant_ensemble({1.0, 2.0, 3.0}), kProbe) == doctest::Approx(2.0));
  CHECK(bagged_prediction(constant_ensemble({7.5, 7.5, 7.5, 7.5}), kProbe) ==
        doctest::Approx(7.5));
}

TEST_CASE("bagged prediction matches a compensated-summation oracle") {
  Rng rng(606);
  std::vector<double> predictions(100);
  for (auto& p : predictions) p = rng.uniform(-1000.0, 1000.0);
  const BootstrapEnsemble ensemble = constant_ensemble(predictions);

  // Kahan summation as the independent route
  double sum = 0.0, carry = 0.0;
  for (double p : predictions) {
    const double y = p - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  const double oracle = sum / 100.0;
  CHECK(std::fabs(bagged_prediction(ensemble, kProbe) - oracle) < 1e-12);
}

TEST_CASE("prediction variance uses divisor B - 1") {
  CHECK(prediction_variance(constant_ensemble({1.0, 2.0, 3.0}), kProbe) == doctest::Approx(1.0));
  CHECK(prediction_variance(constant_ensemble({4.0, 4.0, 4.0}), kProbe) == doctest::Approx(0.0));
  CHECK_THROWS_AS(prediction_variance(constant_ensemble({1.0}), kProbe), Error);
}

TEST_CASE("prediction variance matches a two-pass oracle") {
  Rng rng(607);
  std::vector<double> predictions(64);
  for (auto& p : predictions) p = rng.uniform(-50.0, 50.0);
  const BootstrapEnsemble ensemble = constant_ensemble(predictions);

  double mean = 0.0;
  for (double p : predictions) mean += p;
  mean /= 64.0;
  double ss = 0.0;
  for (double p : predictions) ss += (p - mean) * (p - mean);
  const double oracle = ss / 63.0;

  const double got = prediction_variance(ensemble, kProbe);
  CHECK(std::fabs(got - oracle) / oracle < 1e-10);
}

TEST_CASE("irreducible error: hand-built residual lists") {
  // one member predicting 0 with out-of-bag residuals {1, -1}
  Dataset train({0.0, 0.0}, {1.0, -1.0}, 1);
  BootstrapEnsemble one;
  one.members.push_back({constant_model(0.0), BootstrapResample{{0, 0}, {0, 1}}});
  CHECK(irreducible_error(one, train) == doctest::Approx(2.0));

  // perfect interpolation has zero residuals
  Dataset flat({0.0, 0.0, 0.0}, {5.0, 5.0, 5.0}, 1);
  BootstrapEnsemble perfect;
  perfect.members.push_back({constant_model(5.0), BootstrapResample{{0, 1, 2}, {0, 1, 2}}});
  CHECK(irreducible_error(perfect, flat) == doctest::Approx(0.0));

  // three members, averaged over the per-member estimates
  Dataset data({0.0, 0.0, 0.0, 0.0}, {2.0, -2.0, 1.0, 3.0}, 1);
  BootstrapEnsemble three;
  three.members.push_back({constant_model(0.0), BootstrapResample{{}, {0, 1}}});
  three.members.push_back({constant_model(1.0), BootstrapResample{{}, {2, 3}}});
  three.members.push_back({constant_model(2.0), BootstrapResample{{}, {0, 2, 3}}});
  // member estimates: (4+4)/1 = 8, (0+4)/1 = 4, (0+1+1)/2 = 1 -> mean 13/3
  CHECK(irreducible_error(three, data) == doctest::Approx(13.0 / 3.0));

  BootstrapEnsemble singleton;
  singleton.members.push_back({constant_model(0.0), BootstrapResample{{}, {0}}});
  CHECK_THROWS_AS(irreducible_error(singleton, data), Error);
}

TEST_CASE("pivot interval from known components") {
  PivotComponents c;
  c.bagged_prediction = 10.0;
  c.prediction_variance = 4.0;
  c.irreducible_error = 5.0;
  c.z_critical = normal_quantile(0.975);
  const PredictionInterval pi = pivot_interval(c, 0.05);
  CHECK(std::fabs(pi.lower - 4.1201) < 1e-3);
  CHECK(std::fabs(pi.upper - 15.8799) < 1e-3);
  CHECK(pi.level == doctest::Approx(0.95));
}

TEST_CASE("pivot interval degenerates when both variances vanish") {
  PivotComponents c{3.25, 0.0, 0.0, normal_quantile(0.975)};
  const PredictionInterval pi = pivot_interval(c, 0.05);
  CHECK(pi.lower == 3.25);
  CHECK(pi.upper == 3.25);
}

TEST_CASE("alpha = 0.5 uses the 0.75 normal quantile") {
  PivotComponents c{0.0, 1.0, 0.0, normal_quantile(0.75)};
  const PredictionInterval pi = pivot_interval(c, 0.5);
  CHECK(std::fabs(pi.upper - 0.67449) < 1e-5);
}

TEST_CASE("pivot interval symmetry is exact") {
  Rng rng(777);
  for (int i = 0; i < 500; ++i) {
    PivotComponents c;
    c.bagged_prediction = rng.uniform(-50.0, 50.0);
    c.prediction_variance = rng.uniform(0.0, 100.0);
    c.irreducible_error = rng.uniform(0.0, 100.0);
    c.z_critical = normal_quantile(rng.uniform(0.51, 0.999));
    const PredictionInterval pi = pivot_interval(c, 0.1);
    CHECK(pi.upper - c.bagged_prediction == c.bagged_prediction - pi.lower);
  }
}

TEST_CASE("pivot intervals are nested in alpha") {
  PivotComponents base{1.0, 2.0, 3.0, 0.0};
  PivotComponents narrow = base;
  base.z_critical = normal_quantile(1.0 - 0.05 / 2.0);    // alpha1 = 0.05
  narrow.z_critical = normal_quantile(1.0 - 0.20 / 2.0);  // alpha2 = 0.20
  const PredictionInterval wide = pivot_interval(base, 0.05);
  const PredictionInterval tight = pivot_interval(narrow, 0.20);
  CHECK(wide.lower <= tight.lower);
  CHECK(wide.upper >= tight.upper);
}

TEST_CASE("pivot_pi end to end on a trained ensemble") {
  const SyntheticData data = generate({TrendKind::linear, 60, 1, NoiseSpec::gaussian(0.3), 15});
  const BootstrapEnsemble ensemble = train_ensemble(LearnerSpec::ridge(0.5), data.data, 30, 3);
  PivotComponents components;
  const std::vector<double> x{0.2};
  const PredictionInterval pi = pivot_pi(ensemble, data.data, x, 0.1, &components);
  CHECK(pi.lower < pi.upper);
  CHECK(components.prediction_variance >= 0.0);
  CHECK(components.irreducible_error > 0.0);
  CHECK(pi.upper - components.bagged_prediction == components.bagged_prediction - pi.lower);
}

TEST_CASE("percentile: four-point enumeration at alpha = 0.5") {
  AdjustedPredictionSample sample;
  sample.values = {1.0, 2.0, 3.0, 4.0};
  sample.sampled_errors = {0.0, 0.0, 0.0, 0.0};
  const PredictionInterval pi = percentile_interval(sample, 0.5);
  CHECK(pi.lower == 1.0);  // ceil(0.25 * 4) = 1st order statistic
  CHECK(pi.upper == 3.0);  // ceil(0.75 * 4) = 3rd order statistic
}

TEST_CASE("percentile: constant sample collapses") {
  AdjustedPredictionSample sample;
  sample.values.assign(32, 6.5);
  sample.sampled_errors.assign(32, 0.0);
  const PredictionInterval pi = percentile_interval(sample, 0.1);
  CHECK(pi.lower == 6.5);
  CHECK(pi.upper == 6.5);
}

TEST_CASE("percentile endpoints are elements of the sample") {
  Rng rng(888);
  AdjustedPredictionSample sample;
  sample.values.resize(101);
  for (auto& v : sample.values) v = rng.uniform(-10.0, 10.0);
  sample.sampled_errors.assign(101, 0.0);
  for (double alpha : {0.02, 0.1, 0.37, 0.5, 0.9}) {
    const PredictionInterval pi = percentile_interval(sample, alpha);
    CHECK(std::count(sample.values.begin(), sample.values.end(), pi.lower) > 0);
    CHECK(std::count(sample.values.begin(), sample.values.end(), pi.upper) > 0);
    CHECK(pi.lower <= pi.upper);
  }
}

TEST_CASE("percentile quantiles of a large normal sample sit near +-1.96") {
  Rng rng(909);
  AdjustedPredictionSample sample;
  sample.values.resize(10000);
  for (auto& v : sample.values) v = rng.normal();
  sample.sampled_errors.assign(10000, 0.0);
  const PredictionInterval pi = percentile_interval(sample, 0.05);
  CHECK(std::fabs(pi.lower + 1.959964) < 0.08);
  CHECK(std::fabs(pi.upper - 1.959964) < 0.08);
}

TEST_CASE("percentile intervals are nested in alpha for shared values") {
  Rng rng(910);
  AdjustedPredictionSample sample;
  sample.values.resize(500);
  for (auto& v : sample.values) v = rng.normal();
  sample.sampled_errors.assign(500, 0.0);
  const PredictionInterval wide = percentile_interval(sample, 0.05);
  const PredictionInterval tight = percentile_interval(sample, 0.30);
  CHECK(wide.lower <= tight.lower);
  CHECK(wide.upper >= tight.upper);
}

TEST_CASE("adjusted sample: value minus stored error recovers the raw prediction") {
  // targets offset well away from zero, so predictions dominate the sampled
  // errors and the identity is exact in floating point
  const SyntheticData raw_data =
      generate({TrendKind::linear, 50, 1, NoiseSpec::gaussian(1.0), 77});
  std::vector<double> shifted = raw_data.data.targets();
  for (double& y : shifted) y += 25.0;
  const Dataset data(raw_data.data.features(), shifted, 1);

  const BootstrapEnsemble ensemble = train_ensemble(LearnerSpec::ridge(0.2), data, 25, 12);
  const std::vector<double> x{0.4};
  const AdjustedPredictionSample sample = adjusted_prediction_sample(ensemble, data, x, 55);
  const std::vector<double> raw = ensemble.member_predictions(x);
  REQUIRE(sample.values.size() == raw.size());
  for (std::size_t b = 0; b < raw.size(); ++b)
    CHECK(sample.values[b] - sample.sampled_errors[b] == raw[b]);

  // deterministic given the seed
  const AdjustedPredictionSample again = adjusted_prediction_sample(ensemble, data, x, 55);
  CHECK(again.values == sample.values);
}

TEST_CASE("percentile_pi enforces the minimum ensemble size") {
  const SyntheticData data = generate({TrendKind::linear, 30, 1, NoiseSpec::gaussian(1.0), 4});
  const BootstrapEnsemble small = train_ensemble(LearnerSpec::ridge(0.2), data.data, 10, 2);
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(percentile_pi(small, data.data, x, 0.1, 9), Error);

  const BootstrapEnsemble ok = train_ensemble(LearnerSpec::ridge(0.2), data.data, 20, 2);
  const PredictionInterval pi = percentile_pi(ok, data.data, x, 0.1, 9);
  CHECK(pi.lower <= pi.upper);
}

TEST_CASE("pivot coverage stays near nominal on well-specified data") {
  // statistical check: marginal coverage at alpha = 0.1 should not dip below 0.88
  const SyntheticData data =
      generate({TrendKind::linear, 2200, 2, NoiseSpec::gaussian(1.0), 2718});
  const auto [train, test] = train_test_split(data.data, 2000, 5);
  REQUIRE(train.rows() == 200);
  const BootstrapEnsemble ensemble = train_ensemble(LearnerSpec::ridge(0.1), train, 200, 31);
  const double noise = irreducible_error(ensemble, train);
  const double z = normal_quantile(0.95);

  long hits = 0;
  for (std::size_t i = 0; i < test.rows(); ++i) {
    PivotComponents c{bagged_prediction(ensemble, test.row(i)),
                      prediction_variance(ensemble, test.row(i)), noise, z};
    hits += pivot_interval(c, 0.1).contains(test.target(i)) ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(test.rows()) >= 0.88);
}

TEST_CASE("empirical_quantile follows the ceiling order-statistic convention") {
  const std::vector<double> values{5.0, 1.0, 3.0, 2.0, 4.0};
  CHECK(empirical_quantile(values, 0.2) == 1.0);   // ceil(1.0) = 1st
  CHECK(empirical_quantile(values, 0.21) == 2.0);  // ceil(1.05) = 2nd
  CHECK(empirical_quantile(values, 1.0) == 5.0);
  CHECK(empirical_quantile(values, 0.0) == 1.0);  // clamped to the 1st
  CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), Error);
}
