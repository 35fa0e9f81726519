#pragma once

#include <cstdint>
#include <cstddef>

#include "fuselab/tensor.hpp"

namespace fuselab {

// Analytic matmul-only FLOP counts for the two attention paradigms over
// N = H*W positions, M text categories, C channels.
//
// Direct cross-attention forms the N x N affinity (2*N*N*C) and aggregates
// through it (2*N*N*C). The bridged path forms two N x M / M x N affinities
// against the M-row text matrix (2*N*M*C each); aggregation through the
// category axis is not part of the paradigm comparison.
std::uint64_t flops_direct(std::uint64_t n, std::uint64_t c);
std::uint64_t flops_bridge(std::uint64_t n, std::uint64_t m_cat, std::uint64_t c);

// bridge / direct = M / N.
double flops_ratio(std::uint64_t n, std::uint64_t m_cat);

struct MeasuredFlops {
  std::uint64_t direct = 0;
  std::uint64_t bridge = 0;
};

// Runs both attention paradigms on concrete tensors under the innermost
// installed CounterScope, charging each phase to it separately. Requires a
// counter to be installed.
MeasuredFlops measured_bridge_vs_direct(const Tensor& x_rgb, const Tensor& x_ir,
                                        const Tensor& t);

}  // namespace fuselab
