#pragma once

#include <span>
#include <vector>

#include "pif/interval.hpp"

namespace pif {

/// One evaluated prediction interval. Empty intervals count as a miss with
/// width 0; they are flagged separately rather than excluded so coverage is
/// not overstated.
struct PiOutcome {
  PredictionInterval interval;
  double true_target = 0.0;
  bool hit = false;
  double width = 0.0;
};

PiOutcome evaluate_interval(PredictionInterval interval, double true_target);

struct CoverageSummary {
  double coverage = 0.0;
  double mean_width = 0.0;
  double se_coverage = 0.0;  // sample sd of the hit indicator / sqrt(count)
  double se_width = 0.0;
  std::size_t count = 0;
  std::size_t hits = 0;
  std::size_t empty_count = 0;
};

CoverageSummary coverage_and_width(std::span<const PiOutcome> outcomes);

/// Adjusted binomial-proportion confidence interval: with z = z_{1-alpha/2},
/// n~ = n + z^2, p~ = (hits + z^2/2) / n~, half = z * sqrt(p~ (1-p~) / n~).
/// valid reports whether the nominal level lies inside [p~ - half, p~ + half].
struct AgrestiCoullResult {
  double estimate = 0.0;  // p~
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool valid = false;
};

AgrestiCoullResult agresti_coull_valid(long hits, long trials, double nominal,
                                       double alpha_test = 0.05);

/// Coverage and width per bin of a per-outcome key (a feature value or the
/// predicted target). Overflow bins are added below the first and above the
/// last edge; empty bins report count 0 with no coverage value.
struct ConditionalBin {
  double lower = 0.0;  // -inf for the underflow bin
  double upper = 0.0;  // +inf for the overflow bin
  std::size_t count = 0;
  std::size_t hits = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
  bool has_coverage = false;
};

struct ConditionalBinReport {
  std::vector<double> edges;
  std::vector<ConditionalBin> bins;
};

ConditionalBinReport conditional_coverage(std::span<const PiOutcome> outcomes,
                                          std::span<const double> keys,
                                          std::span<const double> edges);

/// Same, binned by exact key value (e.g. a binary feature).
struct CategoryBin {
  double key = 0.0;
  std::size_t count = 0;
  std::size_t hits = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
};

std::vector<CategoryBin> conditional_coverage_by_category(std::span<const PiOutcome> outcomes,
                                                          std::span<const double> keys);

}  // namespace pif
