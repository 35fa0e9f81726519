#include "fuselab/bridge_fusion.hpp"

#include "fuselab/errors.hpp"

namespace fuselab {

namespace {

void check_feature(const Tensor& x, const char* op, const char* name) {
  if (x.rank() != 3) {
    throw ShapeError(std::string(op) + ": " + name + " must be {C,H,W}, got " +
                     shape_str(x.shape()));
  }
}

Tensor gaussian_tensor(Shape shape, Rng& rng, double sigma) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
  return t;
}

}  // namespace

Tensor semantic_response(const Tensor& x, const Tensor& t, const Tensor& w_q,
                         const Tensor& w_k, std::size_t d_k) {
  check_feature(x, "semantic_response", "X");
  if (t.rank() != 2) {
    throw ShapeError("semantic_response: T must be {M_cat, d_t}, got " +
                     shape_str(t.shape()));
  }
  if (w_q.rank() != 2 || w_q.shape()[1] != d_k) {
    throw ShapeError("semantic_response: W_q must project to d_k=" +
                     std::to_string(d_k) + ", got " + shape_str(w_q.shape()));
  }
  if (w_k.rank() != 2 || w_k.shape()[1] != d_k) {
    throw ShapeError("semantic_response: W_k must project to d_k=" +
                     std::to_string(d_k) + ", got " + shape_str(w_k.shape()));
  }
  return semantic_response_any(x, t, w_q, w_k, d_k);
}

SupportMaps bi_support(const Tensor& a_ir, const Tensor& a_rgb) {
  if (a_ir.shape() != a_rgb.shape()) {
    throw ShapeError("bi_support: response maps differ, " + shape_str(a_ir.shape()) +
                     " vs " + shape_str(a_rgb.shape()));
  }
  auto [m_cons, m_dis] = bi_support_any(a_ir, a_rgb);
  return SupportMaps{a_rgb, a_ir, std::move(m_cons), std::move(m_dis)};
}

Tensor recalibrate(const Tensor& x_ir, const SupportMaps& maps, double alpha,
                   double beta, CategoryReduction reduction) {
  check_feature(x_ir, "recalibrate", "X_ir");
  const std::size_t hw = x_ir.shape()[1] * x_ir.shape()[2];
  if (maps.m_cons.rank() != 2 || maps.m_cons.shape()[1] != hw ||
      maps.m_dis.shape() != maps.m_cons.shape()) {
    throw ShapeError("recalibrate: support maps must be {M_cat, " +
                     std::to_string(hw) + "}, got " + shape_str(maps.m_cons.shape()) +
                     " and " + shape_str(maps.m_dis.shape()));
  }
  return recalibrate_any(x_ir, maps.m_cons, maps.m_dis, Tensor::scalar(alpha),
                         Tensor::scalar(beta), reduction);
}

FusedFeatures guide_and_fuse(const Tensor& x_rgb, const Tensor& x_tilde_ir,
                             const FusionParams& params) {
  check_feature(x_rgb, "guide_and_fuse", "X_rgb");
  check_feature(x_tilde_ir, "guide_and_fuse", "X_ir");
  if (x_rgb.shape()[1] != x_tilde_ir.shape()[1] ||
      x_rgb.shape()[2] != x_tilde_ir.shape()[2]) {
    throw ShapeError("guide_and_fuse: spatial sizes differ, " +
                     shape_str(x_rgb.shape()) + " vs " + shape_str(x_tilde_ir.shape()));
  }
  GuidedAny<Tensor> g = guide_and_fuse_any(x_rgb, x_tilde_ir, params.psi, params.phi,
                                           params.fuse_kernel);
  return FusedFeatures{x_tilde_ir, std::move(g.x_tilde_ir_align), std::move(g.w_att),
                       std::move(g.x_hat_rgb), std::move(g.f_fuse)};
}

FusedFeatures fuse_forward(const Tensor& x_rgb, const Tensor& x_ir,
                           const TextEmbeddings& text, const FusionParams& params) {
  const Tensor a_rgb =
      semantic_response(x_rgb, text.t, params.w_q, params.w_k_rgb, params.d_k);
  const Tensor a_ir =
      semantic_response(x_ir, text.t, params.w_q, params.w_k_ir, params.d_k);
  const SupportMaps maps = bi_support(a_ir, a_rgb);
  const Tensor x_tilde =
      recalibrate(x_ir, maps, params.alpha, params.beta, params.reduction);
  return guide_and_fuse(x_rgb, x_tilde, params);
}

FusionParams init_fusion_params(std::size_t c_rgb, std::size_t c_ir, std::size_t d_t,
                                std::size_t d_k, Rng& rng) {
  if (c_rgb == 0 || c_ir == 0 || d_t == 0 || d_k == 0) {
    throw ParamError("init_fusion_params: all dims must be positive");
  }
  FusionParams p;
  p.d_k = d_k;
  p.alpha = 0.5;
  p.beta = 0.5;
  p.w_q = gaussian_tensor({d_t, d_k}, rng, 1.0 / std::sqrt(static_cast<double>(d_t)));
  p.w_k_rgb =
      gaussian_tensor({c_rgb, d_k}, rng, 1.0 / std::sqrt(static_cast<double>(c_rgb)));
  p.w_k_ir =
      gaussian_tensor({c_ir, d_k}, rng, 1.0 / std::sqrt(static_cast<double>(c_ir)));
  p.psi = gaussian_tensor({c_rgb, c_ir, 1, 1}, rng,
                          1.0 / std::sqrt(static_cast<double>(c_ir)));
  p.phi = gaussian_tensor({1, c_rgb, 1, 1}, rng,
                          1.0 / std::sqrt(static_cast<double>(c_rgb)));
  p.fuse_kernel = gaussian_tensor({c_rgb, 2 * c_rgb, 3, 3}, rng,
                                  1.0 / std::sqrt(18.0 * static_cast<double>(c_rgb)));
  return p;
}

}  // namespace fuselab
