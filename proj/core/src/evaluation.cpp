#include "pif/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pif/errors.hpp"
#include "pif/normal.hpp"

namespace pif {

PiOutcome evaluate_interval(PredictionInterval interval, double true_target) {
  PiOutcome outcome;
  outcome.hit = interval.contains(true_target);
  outcome.width = interval.width();
  outcome.true_target = true_target;
  outcome.interval = std::move(interval);
  return outcome;
}

CoverageSummary coverage_and_width(std::span<const PiOutcome> outcomes) {
  if (outcomes.empty()) throw Error("coverage_and_width: empty outcome list");
  CoverageSummary s;
  s.count = outcomes.size();
  double width_sum = 0.0;
  for (const auto& o : outcomes) {
    s.hits += o.hit ? 1 : 0;
    s.empty_count += o.interval.empty_set ? 1 : 0;
    width_sum += o.width;
  }
  const double n = static_cast<double>(s.count);
  s.coverage = static_cast<double>(s.hits) / n;
  s.mean_width = width_sum / n;
  if (s.count > 1) {
    double hit_ss = 0.0;
    double width_ss = 0.0;
    for (const auto& o : outcomes) {
      const double h = (o.hit ? 1.0 : 0.0) - s.coverage;
      const double w = o.width - s.mean_width;
      hit_ss += h * h;
      width_ss += w * w;
    }
    s.se_coverage = std::sqrt(hit_ss / (n - 1.0)) / std::sqrt(n);
    s.se_width = std::sqrt(width_ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

AgrestiCoullResult agresti_coull_valid(long hits, long trials, double nominal,
                                       double alpha_test) {
  if (trials < 1) throw Error("agresti_coull_valid: trials must be >= 1");
  if (hits < 0 || hits > trials) throw Error("agresti_coull_valid: hits out of [0, n]");
  if (!(alpha_test > 0.0 && alpha_test < 1.0))
    throw Error("agresti_coull_valid: alpha_test must lie in (0, 1)");

  const double z = normal_quantile(1.0 - alpha_test / 2.0);
  const double n_adj = static_cast<double>(trials) + z * z;
  const double p_adj = (static_cast<double>(hits) + z * z / 2.0) / n_adj;
  const double half = z * std::sqrt(p_adj * (1.0 - p_adj) / n_adj);

  AgrestiCoullResult r;
  r.estimate = p_adj;
  // The adjusted bounds can spill past [0, 1] for extreme counts; the CI is
  // kept strictly inside (0, 1), where the proportion itself must lie.
  r.ci_low = std::max(p_adj - half, std::nextafter(0.0, 1.0));
  r.ci_high = std::min(p_adj + half, std::nextafter(1.0, 0.0));
  r.valid = nominal >= r.ci_low && nominal <= r.ci_high;
  return r;
}

ConditionalBinReport conditional_coverage(std::span<const PiOutcome> outcomes,
                                          std::span<const double> keys,
                                          std::span<const double> edges) {
  if (outcomes.size() != keys.size())
    throw Error("conditional_coverage: outcomes and keys differ in length");
  std::vector<double> sorted_edges(edges.begin(), edges.end());
  std::sort(sorted_edges.begin(), sorted_edges.end());

  ConditionalBinReport report;
  report.edges = sorted_edges;
  const std::size_t bin_count = sorted_edges.size() + 1;
  report.bins.resize(bin_count);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < bin_count; ++b) {
    report.bins[b].lower = b == 0 ? -inf : sorted_edges[b - 1];
    report.bins[b].upper = b == bin_count - 1 ? inf : sorted_edges[b];
  }

  std::vector<double> width_sums(bin_count, 0.0);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    // key in [edge_{b-1}, edge_b) lands in bin b
    const std::size_t b = static_cast<std::size_t>(
        std::upper_bound(sorted_edges.begin(), sorted_edges.end(), keys[i]) -
        sorted_edges.begin());
    auto& bin = report.bins[b];
    ++bin.count;
    bin.hits += outcomes[i].hit ? 1 : 0;
    width_sums[b] += outcomes[i].width;
  }
  for (std::size_t b = 0; b < bin_count; ++b) {
    auto& bin = report.bins[b];
    if (bin.count > 0) {
      bin.coverage = static_cast<double>(bin.hits) / static_cast<double>(bin.count);
      bin.mean_width = width_sums[b] / static_cast<double>(bin.count);
      bin.has_coverage = true;
    }
  }
  return report;
}

std::vector<CategoryBin> conditional_coverage_by_category(std::span<const PiOutcome> outcomes,
                                                          std::span<const double> keys) {
  if (outcomes.size() != keys.size())
    throw Error("conditional_coverage_by_category: outcomes and keys differ in length");
  std::map<double, CategoryBin> bins;
  std::map<double, double> width_sums;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& bin = bins[keys[i]];
    bin.key = keys[i];
    ++bin.count;
    bin.hits += outcomes[i].hit ? 1 : 0;
    width_sums[keys[i]] += outcomes[i].width;
  }
  std::vector<CategoryBin> out;
  out.reserve(bins.size());
  for (auto& [key, bin] : bins) {
    bin.coverage = static_cast<double>(bin.hits) / static_cast<double>(bin.count);
    bin.mean_width = width_sums[key] / static_cast<double>(bin.count);
    out.push_back(bin);
  }
  return out;
}

}  // namespace pif
