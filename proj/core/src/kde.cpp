#include "pif/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pif/errors.hpp"
#include "pif/normal.hpp"

namespace pif {

namespace {

constexpr double kLogInvSqrt2Pi = -0.91893853320467274178032973640562;  // ln(1/sqrt(2*pi))

void check_samples(const std::vector<double>& samples) {
  if (samples.empty()) throw Error("fit_kde: empty sample");
  for (double z : samples)
    if (!std::isfinite(z)) throw Error("fit_kde: non-finite sample value");
}

}  // namespace

KdeModel fit_kde(std::vector<double> samples, double bandwidth) {
  check_samples(samples);
  if (!(bandwidth > 0.0)) throw Error("fit_kde: bandwidth must be > 0");
  return KdeModel{std::move(samples), bandwidth, false};
}

KdeModel fit_kde_auto(std::vector<double> samples) {
  check_samples(samples);
  const std::size_t m = samples.size();
  if (m < 2) throw Error("fit_kde_auto: automatic bandwidth needs at least 2 samples");

  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                      static_cast<double>(m);
  double ss = 0.0;
  for (double z : samples) ss += (z - mean) * (z - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const auto quartile = [&](double p) {
    // linear interpolation between order statistics
    const double pos = p * static_cast<double>(m - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, m - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quartile(0.75) - quartile(0.25);

  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;  // degenerate IQR on heavy-tied samples
  KdeModel model;
  if (!(spread > 0.0)) {
    model.bandwidth = 1e-3 * std::max(1.0, std::fabs(mean));
    model.bandwidth_fallback = true;
  } else {
    model.bandwidth = 1.06 * spread * std::pow(static_cast<double>(m), -0.2);
  }
  model.samples = std::move(samples);
  return model;
}

namespace {

double loo_log_likelihood(const std::vector<double>& samples, double h) {
  const std::size_t m = samples.size();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    // log of the leave-one-out density at samples[i], via log-sum-exp
    double max_exponent = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double t = (samples[i] - samples[j]) / h;
      max_exponent = std::max(max_exponent, -0.5 * t * t);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double t = (samples[i] - samples[j]) / h;
      sum += std::exp(-0.5 * t * t - max_exponent);
    }
    total += max_exponent + std::log(sum) + kLogInvSqrt2Pi -
             std::log(h * static_cast<double>(m - 1));
  }
  return total;
}

}  // namespace

KdeModel fit_kde_select(std::vector<double> samples, std::span<const double> bandwidths) {
  check_samples(samples);
  if (samples.size() < 2) throw Error("fit_kde_select: needs at least 2 samples");
  if (bandwidths.empty()) throw Error("fit_kde_select: empty bandwidth grid");
  double best_h = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double h : bandwidths) {
    if (!(h > 0.0)) throw Error("fit_kde_select: bandwidths must be > 0");
    const double ll = loo_log_likelihood(samples, h);
    if (ll > best_ll) {
      best_ll = ll;
      best_h = h;
    }
  }
  return KdeModel{std::move(samples), best_h, false};
}

double kde_density(const KdeModel& model, double u) {
  if (!std::isfinite(u)) throw Error("kde_density: non-finite query");
  const double h = model.bandwidth;
  double sum = 0.0;
  for (double z : model.samples) sum += normal_pdf((u - z) / h);
  return sum / (h * static_cast<double>(model.samples.size()));
}

double kde_log_density(const KdeModel& model, double u) {
  if (!std::isfinite(u)) throw Error("kde_log_density: non-finite query");
  const double h = model.bandwidth;
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (double z : model.samples) {
    const double t = (u - z) / h;
    max_exponent = std::max(max_exponent, -0.5 * t * t);
  }
  double sum = 0.0;
  for (double z : model.samples) {
    const double t = (u - z) / h;
    sum += std::exp(-0.5 * t * t - max_exponent);
  }
  return max_exponent + std::log(sum) + kLogInvSqrt2Pi -
         std::log(h * static_cast<double>(model.samples.size()));
}

}  // namespace pif
