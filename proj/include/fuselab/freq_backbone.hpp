#pragma once

#include <utility>

#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"

namespace fuselab {

// Dual-branch frequency-aware IR block: a learnable sigmoid mask splits
// each channel's orthonormal DCT spectrum into low and high parts, ghost
// encoders process the two branches, their sum is recalibrated by a
// squeeze-excite gate. Because the split is M and 1-M over one linear
// transform, X_L + X_H reconstructs X up to round-off.

struct FreqMask {
  Tensor logits;  // {H, W}; mask = sigmoid(logits)
};

struct GhostParams {
  Tensor primary;  // {C_out/2, C_in, 1, 1} pointwise kernel
  Tensor cheap;    // {C_out/2, 3, 3} depthwise expansion
};

struct SeParams {
  Tensor w1;  // {C/4, C} squeeze
  Tensor w2;  // {C, C/4} excite
};

struct BranchParams {
  GhostParams phi_l;
  GhostParams phi_h;
  SeParams se;
};

template <typename V>
std::pair<V, V> freq_decompose_any(const V& x, const V& logits) {
  V m = sigmoid(logits);
  V coef = dct2_forward_channels(x);
  V x_l = dct2_inverse_channels(mul_spatial(coef, m));
  V x_h = dct2_inverse_channels(mul_spatial(coef, one_minus(m)));
  return {std::move(x_l), std::move(x_h)};
}

// Ghost encoder, ratio 2: half the output channels from a pointwise
// convolution, the other half from a cheap depthwise 3x3 on that result.
template <typename V>
V ghost_encode_any(const V& x, const V& primary, const V& cheap) {
  V y = conv2d(x, primary, 0);
  V z = depthwise_conv2d(y, cheap, 1);
  return concat_channels(y, z);
}

template <typename V>
V branch_recombine_any(const V& x_l, const V& x_h, const V& l_primary,
                       const V& l_cheap, const V& h_primary, const V& h_cheap) {
  return add(ghost_encode_any(x_l, l_primary, l_cheap),
             ghost_encode_any(x_h, h_primary, h_cheap));
}

// g = sigmoid(W2 relu(W1 gap(X))); output = X * g per channel.
template <typename V>
V se_recalibrate_any(const V& x, const V& w1, const V& w2) {
  const Shape xs = shape_of(x);
  V pooled = reshape(global_avg_pool(x), Shape{xs[0], 1});
  V gate = sigmoid(matmul(w2, relu(matmul(w1, pooled))));
  return mul_channelwise(x, reshape(gate, Shape{xs[0]}));
}

// Mask logits sized {h, w}: +logit(0.88) on the radially lowest quarter of
// coefficient indices (r_low of them), -logit(0.88) elsewhere.
FreqMask init_freq_mask(std::size_t h, std::size_t w, double r_low = 0.25);

std::pair<Tensor, Tensor> freq_decompose(const Tensor& x, const FreqMask& mask);
Tensor ghost_encode(const Tensor& x, const GhostParams& params);
Tensor branch_encode_recombine(const Tensor& x_l, const Tensor& x_h,
                               const BranchParams& params);
Tensor se_recalibrate(const Tensor& x, const SeParams& params);

// decompose -> encode/recombine -> SE.
Tensor freq_block_forward(const Tensor& x, const FreqMask& mask,
                          const BranchParams& params);

// c must be divisible by 4 (SE reduction) and even (ghost halves).
BranchParams init_branch_params(std::size_t c, Rng& rng);

}  // namespace fuselab
