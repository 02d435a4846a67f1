#include <cmath>
#include <vector>

#include "doctest.h"
#include "pif/errors.hpp"
#include "pif/kde.hpp"
#include "pif/normal.hpp"
#include "pif/rng.hpp"

using namespace pif;

namespace {

// Trapezoid integral of the density over [lo, hi] with the given point count.
double trapezoid_mass(const KdeModel& model, double lo, double hi, int points) {
  const double step = (hi - lo) / (points - 1);
  double sum = 0.5 * (kde_density(model, lo) + kde_density(model, hi));
  for (int i = 1; i < points - 1; ++i) sum += kde_density(model, lo + i * step);
  return sum * step;
}

int local_maxima_on_grid(const KdeModel& model, double lo, double hi, int points) {
  std::vector<double> values(points);
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) values[i] = kde_density(model, lo + i * step);
  int count = 0;
  for (int i = 1; i + 1 < points; ++i)
    if (values[i] > values[i - 1] && values[i] > values[i + 1]) ++count;
  return count;
}

}  // namespace

TEST_CASE("single sample at zero peaks at the standard normal density") {
  const KdeModel model = fit_kde({0.0}, 1.0);
  CHECK(std::fabs(kde_density(model, 0.0) - 0.3989422804014327) < 1e-12);
}

TEST_CASE("two symmetric samples evaluate to phi(1) at the midpoint") {
  const KdeModel model = fit_kde({-1.0, 1.0}, 1.0);
  // (1/2) * (phi(1) + phi(-1)) = phi(1)
  CHECK(kde_density(model, 0.0) == doctest::Approx(normal_pdf(1.0)).epsilon(1e-12));
}

TEST_CASE("fit_kde rejects bad input") {
  CHECK_THROWS_AS(fit_kde({}, 1.0), Error);
  CHECK_THROWS_AS(fit_kde({1.0}, 0.0), Error);
  CHECK_THROWS_AS(fit_kde({1.0}, -1.0), Error);
  CHECK_THROWS_AS(fit_kde_auto({1.0}), Error);
}

TEST_CASE("automatic bandwidth lands in the Silverman range on normal data") {
  Rng rng(515);
  std::vector<double> samples(1000);
  for (auto& z : samples) z = rng.normal();
  const KdeModel model = fit_kde_auto(samples);
  CHECK(model.bandwidth >= 0.15);
  CHECK(model.bandwidth <= 0.40);
  CHECK_FALSE(model.bandwidth_fallback);

  // oracle: 1.06 * min(sd, IQR/1.34) * m^(-1/5) recomputed directly
  double mean = 0.0;
  for (double z : samples) mean += z;
  mean /= 1000.0;
  double ss = 0.0;
  for (double z : samples) ss += (z - mean) * (z - mean);
  const double sd = std::sqrt(ss / 999.0);
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted[249] + 0.75 * (sorted[250] - sorted[249]);
  const double q3 = sorted[749] + 0.25 * (sorted[750] - sorted[749]);
  const double expected = 1.06 * std::min(sd, (q3 - q1) / 1.34) * std::pow(1000.0, -0.2);
  CHECK(model.bandwidth == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("automatic bandwidth falls back on zero-variance samples") {
  const KdeModel model = fit_kde_auto({4.0, 4.0, 4.0});
  CHECK(model.bandwidth_fallback);
  CHECK(model.bandwidth == doctest::Approx(1e-3 * 4.0));
}

TEST_CASE("density integrates to one") {
  Rng rng(99);
  std::vector<double> samples(200);
  for (auto& z : samples) z = rng.uniform(-3.0, 5.0);
  const KdeModel model = fit_kde(samples, 0.7);
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double pad = 10.0 * ((*hi_it - *lo_it) + model.bandwidth);
  CHECK(std::fabs(trapezoid_mass(model, *lo_it - pad, *hi_it + pad, 10001) - 1.0) < 1e-4);
}

TEST_CASE("far tails underflow to zero but stay non-negative and finite") {
  const KdeModel model = fit_kde({0.0, 0.5}, 1.0);
  const double tail = kde_density(model, 1e6);
  CHECK(tail >= 0.0);
  CHECK(std::isfinite(tail));
  CHECK(tail == 0.0);

  // the log-density stays finite long past the underflow point
  const double log_tail = kde_log_density(model, 1e6);
  CHECK(std::isfinite(log_tail));
  CHECK(log_tail < -1e9);
}

TEST_CASE("log-density agrees with log of density where it does not underflow") {
  Rng rng(7);
  std::vector<double> samples(50);
  for (auto& z : samples) z = rng.normal();
  const KdeModel model = fit_kde(samples, 0.4);
  for (double u : {-2.0, -0.3, 0.0, 1.1, 3.5})
    CHECK(kde_log_density(model, u) ==
          doctest::Approx(std::log(kde_density(model, u))).epsilon(1e-12));
}

TEST_CASE("shift equivariance") {
  Rng rng(17);
  std::vector<double> samples(64);
  for (auto& z : samples) z = rng.uniform(-1.0, 1.0);
  const double shift = 13.75;
  std::vector<double> shifted = samples;
  for (auto& z : shifted) z += shift;

  const KdeModel base = fit_kde(samples, 0.3);
  const KdeModel moved = fit_kde(shifted, 0.3);
  for (double u : {-0.9, 0.0, 0.42, 2.0})
    CHECK(std::fabs(kde_density(base, u) - kde_density(moved, u + shift)) < 1e-12);
}

TEST_CASE("growing bandwidth smooths modes away") {
  // fixed bimodal sample
  std::vector<double> samples;
  Rng rng(23);
  for (int i = 0; i < 60; ++i) samples.push_back(-3.0 + 0.3 * rng.normal());
  for (int i = 0; i < 60; ++i) samples.push_back(3.0 + 0.3 * rng.normal());

  const KdeModel sharp = fit_kde(samples, 0.1);
  const KdeModel smooth = fit_kde(samples, 100.0);
  const int sharp_modes = local_maxima_on_grid(sharp, -6.0, 6.0, 2001);
  const int smooth_modes = local_maxima_on_grid(smooth, -6.0, 6.0, 2001);
  CHECK(sharp_modes >= 2);
  CHECK(smooth_modes <= sharp_modes);
  CHECK(smooth_modes <= 1);
}

TEST_CASE("leave-one-out grid selection picks a sensible interior bandwidth") {
  Rng rng(321);
  std::vector<double> samples(300);
  for (auto& z : samples) z = rng.normal();
  const std::vector<double> grid{0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
  const KdeModel model = fit_kde_select(samples, grid);
  CHECK(model.bandwidth >= 0.05);
  CHECK(model.bandwidth <= 0.8);

  CHECK_THROWS_AS(fit_kde_select(samples, std::vector<double>{}), Error);
  CHECK_THROWS_AS(fit_kde_select(samples, std::vector<double>{0.0}), Error);
}
