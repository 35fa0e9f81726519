#pragma once

#include <cstdint>

#include "fuselab/errors.hpp"

namespace fuselab {

// FLOP accounting for matrix multiplies. A matmul of (a x b) by (b x c)
// costs 2*a*b*c FLOPs (one multiply plus one add per inner step). Only
// matmul is counted; elementwise work is excluded from the model on purpose.
class OpCounter {
 public:
  void add_matmul(std::uint64_t m, std::uint64_t k, std::uint64_t n) {
    add(checked_mul(2, checked_mul(m, checked_mul(k, n))));
  }

  void add(std::uint64_t flops) {
    if (total_ > kMax - flops) {
      throw NumericError("flop counter overflow past 2^63-1");
    }
    total_ += flops;
  }

  std::uint64_t total() const { return total_; }
  void reset() { total_ = 0; }

 private:
  static constexpr std::uint64_t kMax = 0x7fffffffffffffffULL;

  static std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > kMax / a) {
      throw NumericError("flop counter overflow past 2^63-1");
    }
    return a * b;
  }

  std::uint64_t total_ = 0;
};

namespace detail {
OpCounter*& active_counter();
}  // namespace detail

// RAII scope that routes matmul costs into `counter` for the current thread.
// Scopes nest; the innermost one receives the counts.
class CounterScope {
 public:
  explicit CounterScope(OpCounter& counter)
      : previous_(detail::active_counter()) {
    detail::active_counter() = &counter;
  }
  ~CounterScope() { detail::active_counter() = previous_; }

  CounterScope(const CounterScope&) = delete;
  CounterScope& operator=(const CounterScope&) = delete;

 private:
  OpCounter* previous_;
};

}  // namespace fuselab
