#pragma once

#include <cstdint>
#include <vector>

#include "pif/dataset.hpp"

namespace pif {

enum class TrendKind { linear, sinusoid, friedman };
enum class NoiseKind { gaussian, skewed, bimodal };

/// Noise attached to the trend: gaussian(sigma), skewed (exponential with the
/// given scale, shifted to mean zero), or bimodal (symmetric two-Gaussian
/// mixture with modes at +/- gap/2).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double param = 1.0;  // sigma / shape / gap

  static NoiseSpec gaussian(double sigma) { return {NoiseKind::gaussian, sigma}; }
  static NoiseSpec skewed(double shape) { return {NoiseKind::skewed, shape}; }
  static NoiseSpec bimodal(double gap) { return {NoiseKind::bimodal, gap}; }
};

struct GeneratorSpec {
  TrendKind kind = TrendKind::linear;
  std::size_t n = 100;
  std::size_t d = 1;
  NoiseSpec noise;
  std::uint64_t seed = 0;
};

/// Generated dataset plus the noiseless targets, kept for oracle checks.
/// Rows are i.i.d., hence exchangeable.
struct SyntheticData {
  Dataset data;
  std::vector<double> truth;
};

SyntheticData generate(const GeneratorSpec& spec);

}  // namespace pif
