#pragma once

#include <span>
#include <vector>

namespace pif {

/// Gaussian-kernel density estimate over a fixed sample. Evaluation is a
/// direct O(m) sum; the model is immutable after fitting.
struct KdeModel {
  std::vector<double> samples;
  double bandwidth = 0.0;
  /// Set when automatic selection hit a zero-variance sample and fell back to
  /// bandwidth = 1e-3 * max(1, |sample mean|).
  bool bandwidth_fallback = false;
};

/// Fit with an explicit bandwidth (> 0).
KdeModel fit_kde(std::vector<double> samples, double bandwidth);

/// Silverman's rule: 1.06 * min(sd, IQR / 1.34) * m^(-1/5); needs m >= 2.
KdeModel fit_kde_auto(std::vector<double> samples);

/// Pick the bandwidth from a candidate grid by leave-one-out log-likelihood.
KdeModel fit_kde_select(std::vector<double> samples, std::span<const double> bandwidths);

/// (1/m) * sum_i (1/h) * phi((u - z_i) / h); underflows to 0 in far tails.
double kde_density(const KdeModel& model, double u);

/// log of kde_density computed with log-sum-exp; stays finite far past the
/// point where the density itself underflows.
double kde_log_density(const KdeModel& model, double u);

}  // namespace pif
