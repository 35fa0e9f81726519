#include "fuselab/baselines.hpp"

#include <cmath>
#include <cstddef>

#include "fuselab/errors.hpp"

namespace fuselab {
namespace {

void check_feature(const Tensor& x, const char* name) {
  if (x.shape().size() != 3) {
    throw ShapeError(std::string(name) + " must have rank 3 {C,H,W}, got " +
                     shape_str(x.shape()));
  }
}

Tensor flatten_rows(const Tensor& x) {
  const std::size_t c = x.shape()[0];
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  return transpose(reshape(x, {c, hw}));  // {HW, C}
}

}  // namespace

VanillaFusion vanilla_direct_fuse(const Tensor& x_rgb, const Tensor& x_ir,
                                  const BaselineParams& params) {
  check_feature(x_rgb, "x_rgb");
  check_feature(x_ir, "x_ir");
  if (x_rgb.shape()[1] != x_ir.shape()[1] ||
      x_rgb.shape()[2] != x_ir.shape()[2]) {
    throw ShapeError("vanilla_direct_fuse: spatial dims differ, " +
                     shape_str(x_rgb.shape()) + " vs " + shape_str(x_ir.shape()));
  }
  if (params.d_k == 0) throw ParamError("vanilla_direct_fuse: d_k must be positive");
  const std::size_t c_rgb = x_rgb.shape()[0];
  const std::size_t c_ir = x_ir.shape()[0];
  const std::size_t h = x_ir.shape()[1];
  const std::size_t w = x_ir.shape()[2];
  if (params.w_q.shape() != Shape{c_ir, params.d_k}) {
    throw ShapeError("vanilla_direct_fuse: w_q must be {" + std::to_string(c_ir) +
                     "," + std::to_string(params.d_k) + "}, got " +
                     shape_str(params.w_q.shape()));
  }
  if (params.w_k.shape() != Shape{c_rgb, params.d_k}) {
    throw ShapeError("vanilla_direct_fuse: w_k must be {" + std::to_string(c_rgb) +
                     "," + std::to_string(params.d_k) + "}, got " +
                     shape_str(params.w_k.shape()));
  }
  if (params.w_v.shape() != Shape{c_rgb, c_ir}) {
    throw ShapeError("vanilla_direct_fuse: w_v must be {" + std::to_string(c_rgb) +
                     "," + std::to_string(c_ir) + "}, got " +
                     shape_str(params.w_v.shape()));
  }

  const Tensor ir_rows = flatten_rows(x_ir);    // {HW, C_ir}
  const Tensor rgb_rows = flatten_rows(x_rgb);  // {HW, C_rgb}
  const Tensor q = matmul(ir_rows, params.w_q);
  const Tensor k = matmul(rgb_rows, params.w_k);
  const Tensor a = sigmoid(
      scale(matmul(q, transpose(k)), 1.0 / std::sqrt(double(params.d_k))));
  const Tensor v = matmul(rgb_rows, params.w_v);  // {HW, C_ir}
  VanillaFusion out;
  out.attention = a;
  out.response = reshape(transpose(matmul(a, v)), {c_ir, h, w});
  return out;
}

Tensor conditional_prompt_fuse(const Tensor& r, const Tensor& t,
                               const BaselineParams& params) {
  check_feature(r, "r");
  if (t.shape().size() != 2) {
    throw ShapeError("conditional_prompt_fuse: t must have rank 2 {M,d_t}, got " +
                     shape_str(t.shape()));
  }
  const std::size_t c_ir = r.shape()[0];
  const std::size_t d_t = t.shape()[1];
  const std::size_t hidden = d_t / 2;
  if (d_t % 2 != 0) {
    throw ParamError("conditional_prompt_fuse: d_t must be even, got " +
                     std::to_string(d_t));
  }
  if (params.mlp_w1.shape() != Shape{d_t, hidden}) {
    throw ShapeError("conditional_prompt_fuse: mlp_w1 must be {" +
                     std::to_string(d_t) + "," + std::to_string(hidden) +
                     "}, got " + shape_str(params.mlp_w1.shape()));
  }
  if (params.mlp_b1.shape() != Shape{hidden}) {
    throw ShapeError("conditional_prompt_fuse: mlp_b1 must be {" +
                     std::to_string(hidden) + "}, got " +
                     shape_str(params.mlp_b1.shape()));
  }
  if (params.mlp_w2.shape() != Shape{hidden, 2 * c_ir}) {
    throw ShapeError("conditional_prompt_fuse: mlp_w2 must be {" +
                     std::to_string(hidden) + "," + std::to_string(2 * c_ir) +
                     "}, got " + shape_str(params.mlp_w2.shape()));
  }
  if (params.mlp_b2.shape() != Shape{2 * c_ir}) {
    throw ShapeError("conditional_prompt_fuse: mlp_b2 must be {" +
                     std::to_string(2 * c_ir) + "}, got " +
                     shape_str(params.mlp_b2.shape()));
  }

  const Tensor pooled = reshape(colwise_mean(t), {1, d_t});
  Tensor h1 = matmul(pooled, params.mlp_w1);
  for (std::size_t j = 0; j < h1.size(); ++j) h1[j] += params.mlp_b1[j];
  h1 = gelu(h1);
  Tensor h2 = matmul(h1, params.mlp_w2);  // {1, 2*C_ir}
  for (std::size_t j = 0; j < h2.size(); ++j) h2[j] += params.mlp_b2[j];
  const Tensor cols = transpose(h2);  // {2*C_ir, 1}
  const Tensor gamma = reshape(slice_rows(cols, 0, c_ir), {c_ir});
  const Tensor beta = reshape(slice_rows(cols, c_ir, 2 * c_ir), {c_ir});
  const Tensor scaled = mul_channelwise(r, add_scalar(gamma, 1.0));
  return add_channel_bias(scaled, beta);
}

BaselineParams init_baseline_params(std::size_t c_rgb, std::size_t c_ir,
                                    std::size_t d_t, std::size_t d_k, Rng& rng) {
  if (c_rgb == 0 || c_ir == 0 || d_t == 0 || d_k == 0) {
    throw ParamError("init_baseline_params: dimensions must be positive");
  }
  if (d_t % 2 != 0) {
    throw ParamError("init_baseline_params: d_t must be even, got " +
                     std::to_string(d_t));
  }
  const std::size_t hidden = d_t / 2;
  auto gauss = [&rng](Shape shape, double sigma) {
    Tensor t = Tensor::zeros(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
    return t;
  };
  BaselineParams p;
  p.w_q = gauss({c_ir, d_k}, 1.0 / std::sqrt(double(c_ir)));
  p.w_k = gauss({c_rgb, d_k}, 1.0 / std::sqrt(double(c_rgb)));
  p.w_v = gauss({c_rgb, c_ir}, 1.0 / std::sqrt(double(c_rgb)));
  p.mlp_w1 = gauss({d_t, hidden}, 1.0 / std::sqrt(double(d_t)));
  p.mlp_b1 = Tensor::zeros({hidden});
  p.mlp_w2 = gauss({hidden, 2 * c_ir}, 1.0 / std::sqrt(double(hidden)));
  p.mlp_b2 = Tensor::zeros({2 * c_ir});
  p.d_k = d_k;
  return p;
}

}  // namespace fuselab
