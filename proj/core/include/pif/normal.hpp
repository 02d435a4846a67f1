#pragma once

namespace pif {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF for p in (0, 1).
/// Rational approximation (Wichura's algorithm), absolute error well below 1e-9.
double normal_quantile(double p);

}  // namespace pif
