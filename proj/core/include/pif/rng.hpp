#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace pif {

/// SplitMix64 mixer; used to seed the main engine and derive substreams.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Deterministic substream derivation: independent tasks get fork_seed(seed, task).
std::uint64_t fork_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256++ generator with portable, implementation-defined-free distributions.
/// All randomized operations in the library are pure functions of (inputs, seed),
/// so results do not depend on the platform's <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  Rng fork(std::uint64_t stream) const { return Rng(fork_seed(seed_, stream)); }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform index in [0, n); n must be >= 1.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller (one variate per call).
  double normal();
  /// Exponential with the given scale (mean).
  double exponential(double scale);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

}  // namespace pif
