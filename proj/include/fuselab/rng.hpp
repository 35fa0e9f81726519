#pragma once

#include <cmath>
#include <cstdint>

namespace fuselab {

// Deterministic pseudo-random generator: SplitMix64 core with Box-Muller
// Gaussian variates. SplitMix64 (Steele, Lea, Flood 2014) is a 64-bit
// counter-based mixer; the integer stream is bit-exact everywhere, so equal
// seeds give equal sequences across runs.
//
// uniform() draws 53 mantissa bits from one SplitMix64 step, giving values
// in [0, 1). gaussian() consumes two uniforms per Box-Muller pair and caches
// the second variate.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform double in (0, 1]; keeps log() finite in Box-Muller.
  double uniform_open0() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal variate via Box-Muller.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  // Uniform integer in [0, n). n == 0 is invalid.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Stable combiner for deriving per-stream seeds, e.g. per (image, level).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fuselab
