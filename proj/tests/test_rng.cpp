#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "pif/normal.hpp"
#include "pif/rng.hpp"

using namespace pif;

TEST_CASE("fork_seed derives decorrelated, reproducible substreams") {
  CHECK(fork_seed(42, 0) == fork_seed(42, 0));
  CHECK(fork_seed(42, 0) != fork_seed(42, 1));
  CHECK(fork_seed(42, 0) != fork_seed(43, 0));

  Rng a = Rng(7).fork(3);
  Rng b = Rng(7).fork(3);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform and uniform_index stay in range") {
  Rng rng(123);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const std::size_t k = rng.uniform_index(7);
    CHECK(k < 7);
  }
  CHECK_THROWS(rng.uniform_index(0));
}

TEST_CASE("shuffle produces a permutation") {
  std::vector<int> values(50);
  std::iota(values.begin(), values.end(), 0);
  Rng rng(99);
  rng.shuffle(values);
  std::vector<int> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    ss += z * z;
  }
  const double mean = sum / n;
  const double var = ss / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("normal_quantile matches tabulated values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.75) - 0.674489750196082) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.95) - 1.644853626951472) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.99) - 2.326347874040841) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.999) - 3.090232306167813) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.025) + 1.959963984540054) < 1e-9);
  CHECK(std::fabs(normal_quantile(1e-9) + 5.997807015008182) < 1e-7);
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));

  // round trip through the CDF
  for (double p : {0.001, 0.1, 0.3, 0.62, 0.9, 0.9999})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
}
