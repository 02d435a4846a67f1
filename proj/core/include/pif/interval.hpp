#pragma once

#include <vector>

namespace pif {

/// A prediction interval at confidence level = 1 - alpha. Conformal methods
/// additionally carry the accepted candidate values, of which [lower, upper]
/// is the hull. An empty accepted set is reported as-is (empty_set = true,
/// NaN bounds), never silently widened.
struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  bool empty_set = false;
  std::vector<double> accepted;

  double width() const { return empty_set ? 0.0 : upper - lower; }
  bool contains(double y) const { return !empty_set && lower <= y && y <= upper; }
};

}  // namespace pif
