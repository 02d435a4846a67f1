#include "pif/rng.hpp"

#include <cmath>

#include "pif/errors.hpp"

namespace pif {

std::uint64_t fork_seed(std::uint64_t seed, std::uint64_t stream) {
  // Mix the stream index into the key before expanding, so fork(a) and fork(b)
  // are decorrelated even for adjacent indices.
  SplitMix64 mixer(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
  mixer.next();
  return mixer.next();
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  SplitMix64 mixer(seed);
  for (auto& word : state_) word = mixer.next();
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw Error("uniform_index: n must be >= 1");
  // Lemire multiply-shift; bias is < 2^-64 * n, negligible for any feasible n.
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Rng::normal() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double Rng::exponential(double scale) {
  const double u = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  return -scale * std::log(u);
}

}  // namespace pif
