#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"

namespace fuselab {

// Text-bridged RGB-IR fusion block. Category text embeddings act as the
// shared query; each modality answers with a sigmoid response map, the two
// maps split into consensus and discrepancy support, and the supports
// recalibrate the IR features that then gate and join the RGB stream.
//
// The pipeline stages are written as templates over the value type V so the
// same expressions run on plain Tensors and on autodiff Vars; overloads are
// found by argument-dependent lookup.

enum class CategoryReduction { kMax, kMean };

struct TextEmbeddings {
  Tensor t;  // {M_cat, d_t}
  std::vector<std::string> category_names;
};

struct FusionParams {
  Tensor w_q;          // {d_t, d_k}
  Tensor w_k_rgb;      // {C_rgb, d_k}, a 1x1 projection
  Tensor w_k_ir;       // {C_ir, d_k}
  double alpha = 0.5;
  double beta = 0.5;
  Tensor psi;          // {C_rgb, C_ir, 1, 1}
  Tensor phi;          // {1, C_rgb, 1, 1}
  Tensor fuse_kernel;  // {C_rgb, 2*C_rgb, 3, 3}
  std::size_t d_k = 0;
  CategoryReduction reduction = CategoryReduction::kMax;
};

struct SupportMaps {
  Tensor a_rgb;   // {M_cat, HW}, entries in (0,1)
  Tensor a_ir;    // {M_cat, HW}
  Tensor m_cons;  // a_ir * a_rgb
  Tensor m_dis;   // a_ir * (1 - a_rgb)
};

struct FusedFeatures {
  Tensor x_tilde_ir;        // {C_ir, H, W}
  Tensor x_tilde_ir_align;  // {C_rgb, H, W}
  Tensor w_att;             // {1, H, W}, entries in (0,1)
  Tensor x_hat_rgb;         // {C_rgb, H, W}
  Tensor f_fuse;            // {C_rgb, H, W}
};

// A = sigmoid(Q K^T / sqrt(d_k)) with Q = T W_q and K the 1x1 projection of
// X flattened to {HW, d_k}. Result is {M_cat, HW}.
template <typename V>
V semantic_response_any(const V& x, const V& t, const V& w_q, const V& w_k,
                        std::size_t d_k) {
  const Shape xs = shape_of(x);
  V xf = transpose(reshape(x, Shape{xs[0], xs[1] * xs[2]}));
  V k = matmul(xf, w_k);
  V q = matmul(t, w_q);
  V logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_k)));
  return sigmoid(logits);
}

// M_cons = A_ir * A_rgb, M_dis = A_ir * (1 - A_rgb); the two add back to
// A_ir identically.
template <typename V>
std::pair<V, V> bi_support_any(const V& a_ir, const V& a_rgb) {
  return {mul(a_ir, a_rgb), mul(a_ir, one_minus(a_rgb))};
}

// Collapses the category axis of each support map to one spatial plane,
// then returns X_ir * (1 + beta*m_cons) * (1 + alpha*m_dis). alpha and beta
// travel as shape-{1} values so they stay differentiable.
template <typename V>
V recalibrate_any(const V& x_ir, const V& m_cons, const V& m_dis, const V& alpha,
                  const V& beta, CategoryReduction reduction) {
  const Shape xs = shape_of(x_ir);
  const Shape plane{xs[1], xs[2]};
  V mc = reduction == CategoryReduction::kMax ? colwise_max(m_cons) : colwise_mean(m_cons);
  V md = reduction == CategoryReduction::kMax ? colwise_max(m_dis) : colwise_mean(m_dis);
  V gate_cons = add_scalar(scale_by(reshape(mc, plane), beta), 1.0);
  V gate_dis = add_scalar(scale_by(reshape(md, plane), alpha), 1.0);
  return mul_spatial(mul_spatial(x_ir, gate_cons), gate_dis);
}

template <typename V>
struct GuidedAny {
  V x_tilde_ir_align;
  V w_att;  // {1, H, W}
  V x_hat_rgb;
  V f_fuse;
};

// Eq. of the guidance stage: align IR channels to RGB width (psi, 1x1),
// squash to a spatial gate (phi then sigmoid), gate the RGB stream, and
// fuse the concatenation with a 3x3 convolution.
template <typename V>
GuidedAny<V> guide_and_fuse_any(const V& x_rgb, const V& x_tilde_ir, const V& psi,
                                const V& phi, const V& fuse_kernel) {
  V align = conv2d(x_tilde_ir, psi, 0);
  V w_att = sigmoid(conv2d(align, phi, 0));
  const Shape ws = shape_of(w_att);
  V x_hat = mul_spatial(x_rgb, reshape(w_att, Shape{ws[1], ws[2]}));
  V fused = conv2d(concat_channels(x_hat, align), fuse_kernel, 1);
  return {align, w_att, x_hat, fused};
}

// Full composition used by fuse_forward and the gradient suites.
template <typename V>
GuidedAny<V> fuse_forward_any(const V& x_rgb, const V& x_ir, const V& t, const V& w_q,
                              const V& w_k_rgb, const V& w_k_ir, const V& alpha,
                              const V& beta, const V& psi, const V& phi,
                              const V& fuse_kernel, std::size_t d_k,
                              CategoryReduction reduction, V* x_tilde_out = nullptr) {
  V a_rgb = semantic_response_any(x_rgb, t, w_q, w_k_rgb, d_k);
  V a_ir = semantic_response_any(x_ir, t, w_q, w_k_ir, d_k);
  auto [m_cons, m_dis] = bi_support_any(a_ir, a_rgb);
  V x_tilde = recalibrate_any(x_ir, m_cons, m_dis, alpha, beta, reduction);
  if (x_tilde_out != nullptr) *x_tilde_out = x_tilde;
  return guide_and_fuse_any(x_rgb, x_tilde, psi, phi, fuse_kernel);
}

// Tensor-level entry points with shape validation.
Tensor semantic_response(const Tensor& x, const Tensor& t, const Tensor& w_q,
                         const Tensor& w_k, std::size_t d_k);
SupportMaps bi_support(const Tensor& a_ir, const Tensor& a_rgb);
Tensor recalibrate(const Tensor& x_ir, const SupportMaps& maps, double alpha,
                   double beta, CategoryReduction reduction = CategoryReduction::kMax);
FusedFeatures guide_and_fuse(const Tensor& x_rgb, const Tensor& x_tilde_ir,
                             const FusionParams& params);
FusedFeatures fuse_forward(const Tensor& x_rgb, const Tensor& x_ir,
                           const TextEmbeddings& text, const FusionParams& params);

// Gaussian-initialized parameter set; alpha = beta = 0.5.
FusionParams init_fusion_params(std::size_t c_rgb, std::size_t c_ir, std::size_t d_t,
                                std::size_t d_k, Rng& rng);

}  // namespace fuselab
