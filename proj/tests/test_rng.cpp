#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "fuselab/rng.hpp"

using fuselab::Rng;

TEST_SUITE("rng") {

TEST_CASE("equal seeds give equal streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42), d(43);
  bool all_equal = true;
  for (int i = 0; i < 10; ++i) all_equal &= c.next_u64() == d.next_u64();
  CHECK_FALSE(all_equal);
}

TEST_CASE("uniform ranges") {
  Rng rng(7);
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform_open0();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("gaussian moments") {
  Rng rng(11);
  const int n = 50000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("gaussian affine form") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.gaussian(3.0, 2.0) == doctest::Approx(3.0 + 2.0 * b.gaussian()).epsilon(1e-15));
  }
}

TEST_CASE("below stays in range") {
  Rng rng(9);
  std::vector<int> seen(13, 0);
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t v = rng.below(13);
    REQUIRE(v < 13);
    ++seen[std::size_t(v)];
  }
  for (int count : seen) CHECK(count > 0);
}

TEST_CASE("mix is deterministic and order-sensitive") {
  CHECK(Rng::mix(1, 2) == Rng::mix(1, 2));
  CHECK(Rng::mix(1, 2) != Rng::mix(2, 1));
  CHECK(Rng::mix(0, 0) != Rng::mix(0, 1));
}

}  // TEST_SUITE
