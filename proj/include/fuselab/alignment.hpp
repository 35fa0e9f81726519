#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"

namespace fuselab {

// Bidirectional vision-text alignment and the region-text matching head.
// Text reads out spatial support from fused features; pooled multi-scale
// visual evidence flows back into the text embeddings through a residual
// cross-attention update; regions and updated text meet in a shared
// embedding space under a contrastive matching loss.

struct AlignmentParams {
  // text -> vision readout
  Tensor w_q_tv;  // {d_t, d}
  Tensor w_k_tv;  // {C, d}
  Tensor w_v_tv;  // {C, d}
  // visual-token -> text residual update
  Tensor w_q_up;  // {d_t, d}
  Tensor w_k_up;  // {C, d}
  Tensor w_v_up;  // {C, d}
  Tensor w_o_up;  // {d, d_t}
  // optional per-scale projections {C_i, C} for pyramids with mixed widths
  std::vector<Tensor> scale_proj;
};

struct MatchingHead {
  Tensor p_v;  // {d_r, d_embed}
  Tensor p_t;  // {d_t, d_embed}
  double tau = 0.07;
};

struct TextVisionAttention {
  Tensor attention;  // {N_c, HW}, rows sum to 1
  Tensor context;    // {N_c, d}
};

// A = softmax over spatial positions of (T W_q)(X W_k)^T / sqrt(d);
// context = A (X W_v).
template <typename V>
std::pair<V, V> text_to_vision_attend_any(const V& t, const V& f, const V& w_q,
                                          const V& w_k, const V& w_v) {
  const Shape fs = shape_of(f);
  V vf = transpose(reshape(f, Shape{fs[0], fs[1] * fs[2]}));
  V q = matmul(t, w_q);
  V k = matmul(vf, w_k);
  V v = matmul(vf, w_v);
  const double d = static_cast<double>(shape_of(w_q)[1]);
  V a = softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d)));
  V ctx = matmul(a, v);
  return {std::move(a), std::move(ctx)};
}

// T_tilde = T + (softmax(Q K^T / sqrt(d)) V) W_o with Q from T and K, V from
// the visual token U. Zero value projection leaves T unchanged.
template <typename V>
V update_text_any(const V& t, const V& u, const V& w_q, const V& w_k, const V& w_v,
                  const V& w_o) {
  V q = matmul(t, w_q);
  V k = matmul(u, w_k);
  V v = matmul(u, w_v);
  const double d = static_cast<double>(shape_of(w_q)[1]);
  V a = softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d)));
  return add(t, matmul(matmul(a, v), w_o));
}

// s_ij = cosine similarity of projected region i and text j.
template <typename V>
V region_text_similarity_any(const V& r, const V& t, const V& p_v, const V& p_t) {
  V zv = l2_normalize_rows(matmul(r, p_v));
  V zt = l2_normalize_rows(matmul(t, p_t));
  return matmul(zv, transpose(zt));
}

// L = -(1/|P|) sum over pairs (i,j) of log softmax_k(s_ik / tau) at k = j.
template <typename V>
V matching_loss_any(const V& s, const IndexPairs& pairs, const V& tau) {
  return scale(pairs_mean(log_softmax_rows(div_by(s, tau)), pairs), -1.0);
}

TextVisionAttention text_to_vision_attend(const Tensor& t, const Tensor& f,
                                          const AlignmentParams& params);

// Visual semantic token: row i is the global average pool of pyramid level
// i. All levels must share one channel width; the projected overload maps
// each pooled row through its per-scale projection first.
Tensor build_visual_token(const std::vector<Tensor>& pyramid);
Tensor build_visual_token(const std::vector<Tensor>& pyramid,
                          const std::vector<Tensor>& scale_proj);

Tensor update_text(const Tensor& t, const Tensor& u, const AlignmentParams& params);

Tensor region_text_similarity(const Tensor& r, const Tensor& t,
                              const MatchingHead& head);

double matching_loss(const Tensor& s, const IndexPairs& pairs, double tau);

AlignmentParams init_alignment_params(std::size_t d_t, std::size_t c, std::size_t d,
                                      Rng& rng);
MatchingHead init_matching_head(std::size_t d_r, std::size_t d_t, std::size_t d_embed,
                                Rng& rng);

}  // namespace fuselab
