#pragma once

#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"

namespace fuselab {

// Comparison fusion paradigms: vanilla direct spatial cross-attention
// between the two visual streams, and FiLM-style conditional prompt
// modulation of its response by text.

struct BaselineParams {
  Tensor w_q;     // {C_ir, d_k} 1x1 query projection of X_ir
  Tensor w_k;     // {C_rgb, d_k} 1x1 key projection of X_rgb
  Tensor w_v;     // {C_rgb, C_ir} 1x1 value projection of X_rgb
  Tensor mlp_w1;  // {d_t, d_t/2}
  Tensor mlp_b1;  // {d_t/2}
  Tensor mlp_w2;  // {d_t/2, 2*C_ir}
  Tensor mlp_b2;  // {2*C_ir}
  std::size_t d_k = 0;
};

struct VanillaFusion {
  Tensor attention;  // {HW, HW}, sigmoid affinities
  Tensor response;   // {C_ir, H, W}
};

// Q = W_q * X_ir, K = W_k * X_rgb, A = sigmoid(Q^T K / sqrt(d_k)) over all
// HW x HW position pairs; the response aggregates projected RGB values
// row-wise through A.
VanillaFusion vanilla_direct_fuse(const Tensor& x_rgb, const Tensor& x_ir,
                                  const BaselineParams& params);

// [gamma_p, beta_p] = MLP(mean-pooled T); F_mod = (1 + gamma_p) * R + beta_p
// channel-wise. A zero MLP reduces to the vanilla response bit for bit.
Tensor conditional_prompt_fuse(const Tensor& r, const Tensor& t,
                               const BaselineParams& params);

// Gaussian weights, zero biases; d_t must be even for the prompt MLP.
BaselineParams init_baseline_params(std::size_t c_rgb, std::size_t c_ir,
                                    std::size_t d_t, std::size_t d_k, Rng& rng);

}  // namespace fuselab
