#include <cmath>

#include "doctest.h"
#include "fuselab/bridge_fusion.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/rng.hpp"
#include "oracles.hpp"

using namespace fuselab;

namespace {

// Straight-line re-computation of the response map, no library ops.
Tensor response_oracle(const Tensor& x, const Tensor& t, const Tensor& w_q,
                       const Tensor& w_k, std::size_t d_k) {
  const std::size_t c = x.shape()[0];
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  const std::size_t m = t.shape()[0];
  const std::size_t d_t = t.shape()[1];
  Tensor out = Tensor::zeros({m, hw});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < hw; ++p) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d_k; ++j) {
        double q = 0.0;
        for (std::size_t u = 0; u < d_t; ++u) q += t[i * d_t + u] * w_q[u * d_k + j];
        double k = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          k += x[ch * hw + p] * w_k[ch * d_k + j];
        }
        dot += q * k;
      }
      out[i * hw + p] = 1.0 / (1.0 + std::exp(-dot / std::sqrt(double(d_k))));
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("bridge_fusion") {

TEST_CASE("semantic response matches the loop oracle") {
  Rng rng(61);
  const std::size_t c = 3, h = 4, w = 5, m = 2, d_t = 6, d_k = 4;
  const Tensor x = oracle::randn(rng, {c, h, w});
  const Tensor t = oracle::randn(rng, {m, d_t});
  const Tensor w_q = oracle::randn(rng, {d_t, d_k});
  const Tensor w_k = oracle::randn(rng, {c, d_k});
  const Tensor a = semantic_response(x, t, w_q, w_k, d_k);
  REQUIRE(a.shape() == Shape{m, h * w});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] > 0.0);
    CHECK(a[i] < 1.0);
  }
  CHECK(oracle::max_abs_diff(a, response_oracle(x, t, w_q, w_k, d_k)) < 1e-12);
}

TEST_CASE("semantic response validates projections") {
  Rng rng(62);
  const Tensor x = oracle::randn(rng, {3, 2, 2});
  const Tensor t = oracle::randn(rng, {2, 6});
  CHECK_THROWS_AS(
      semantic_response(x, t, oracle::randn(rng, {6, 3}), oracle::randn(rng, {3, 4}), 4),
      ShapeError);
  CHECK_THROWS_AS(
      semantic_response(x, t, oracle::randn(rng, {6, 4}), oracle::randn(rng, {2, 4}), 4),
      ShapeError);
}

TEST_CASE("bi-support identity, regrouped form is bitwise") {
  Rng rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a_ir = oracle::randu(rng, {3, 16});
    const Tensor a_rgb = oracle::randu(rng, {3, 16});
    // a * (b + (1 - b)) folds to a exactly: b + (1-b) rounds to 1.0 for b in [0,1]
    const Tensor regrouped = mul(a_ir, add(a_rgb, one_minus(a_rgb)));
    CHECK(oracle::bitwise_equal(regrouped, a_ir));
  }
}

TEST_CASE("bi-support identity, distributed form within 1e-15") {
  Rng rng(64);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor a_ir = oracle::randu(rng, {2, 25});
    const Tensor a_rgb = oracle::randu(rng, {2, 25});
    const SupportMaps maps = bi_support(a_ir, a_rgb);
    const Tensor sum = add(maps.m_cons, maps.m_dis);
    CHECK(oracle::max_abs_diff(sum, a_ir) < 1e-15);
  }
  CHECK_THROWS_AS(bi_support(Tensor::zeros({2, 4}), Tensor::zeros({2, 5})), ShapeError);
}

TEST_CASE("recalibration with zero coefficients is the bitwise identity") {
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x_ir = oracle::randn(rng, {3, 4, 4});
    const SupportMaps maps =
        bi_support(oracle::randu(rng, {2, 16}), oracle::randu(rng, {2, 16}));
    for (CategoryReduction red : {CategoryReduction::kMax, CategoryReduction::kMean}) {
      const Tensor out = recalibrate(x_ir, maps, 0.0, 0.0, red);
      CHECK(oracle::bitwise_equal(out, x_ir));
    }
  }
}

TEST_CASE("recalibration matches the loop oracle for both reductions") {
  Rng rng(66);
  const std::size_t c = 2, h = 3, w = 4, m = 3;
  const Tensor x_ir = oracle::randn(rng, {c, h, w});
  const Tensor a_ir = oracle::randu(rng, {m, h * w});
  const Tensor a_rgb = oracle::randu(rng, {m, h * w});
  const SupportMaps maps = bi_support(a_ir, a_rgb);
  const double alpha = 0.8, beta = 0.4;

  for (CategoryReduction red : {CategoryReduction::kMax, CategoryReduction::kMean}) {
    const Tensor got = recalibrate(x_ir, maps, alpha, beta, red);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t p = 0; p < h * w; ++p) {
        double mc, md;
        if (red == CategoryReduction::kMax) {
          mc = md = -1e300;
          for (std::size_t i = 0; i < m; ++i) {
            mc = std::max(mc, maps.m_cons[i * h * w + p]);
            md = std::max(md, maps.m_dis[i * h * w + p]);
          }
        } else {
          mc = md = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            mc += maps.m_cons[i * h * w + p] / double(m);
            md += maps.m_dis[i * h * w + p] / double(m);
          }
        }
        const double want =
            x_ir[ch * h * w + p] * (1.0 + beta * mc) * (1.0 + alpha * md);
        CHECK(got[ch * h * w + p] == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("guidance stage shapes and gate range") {
  Rng rng(67);
  const std::size_t c_rgb = 4, c_ir = 3, h = 5, w = 6;
  Rng init_rng(99);
  FusionParams params = init_fusion_params(c_rgb, c_ir, 7, 4, init_rng);
  const Tensor x_rgb = oracle::randn(rng, {c_rgb, h, w});
  const Tensor x_tilde = oracle::randn(rng, {c_ir, h, w});
  const FusedFeatures out = guide_and_fuse(x_rgb, x_tilde, params);
  CHECK(out.x_tilde_ir_align.shape() == Shape{c_rgb, h, w});
  CHECK(out.w_att.shape() == Shape{1, h, w});
  CHECK(out.x_hat_rgb.shape() == Shape{c_rgb, h, w});
  CHECK(out.f_fuse.shape() == Shape{c_rgb, h, w});
  for (std::size_t i = 0; i < out.w_att.size(); ++i) {
    CHECK(out.w_att[i] > 0.0);
    CHECK(out.w_att[i] < 1.0);
  }
  // gating is elementwise: x_hat = x_rgb * w_att broadcast over channels
  for (std::size_t ch = 0; ch < c_rgb; ++ch) {
    for (std::size_t p = 0; p < h * w; ++p) {
      CHECK(out.x_hat_rgb[ch * h * w + p] ==
            doctest::Approx(x_rgb[ch * h * w + p] * out.w_att[p]).epsilon(1e-15));
    }
  }
}

TEST_CASE("full forward composes the stages") {
  Rng rng(68);
  const std::size_t c_rgb = 3, c_ir = 2, h = 4, w = 4, m = 2, d_t = 5, d_k = 4;
  Rng init_rng(7);
  FusionParams params = init_fusion_params(c_rgb, c_ir, d_t, d_k, init_rng);
  params.alpha = 0.3;
  params.beta = 0.9;
  const Tensor x_rgb = oracle::randn(rng, {c_rgb, h, w});
  const Tensor x_ir = oracle::randn(rng, {c_ir, h, w});
  TextEmbeddings text;
  text.t = oracle::randn(rng, {m, d_t});

  const FusedFeatures got = fuse_forward(x_rgb, x_ir, text, params);

  const Tensor a_rgb = semantic_response(x_rgb, text.t, params.w_q, params.w_k_rgb, d_k);
  const Tensor a_ir = semantic_response(x_ir, text.t, params.w_q, params.w_k_ir, d_k);
  const SupportMaps maps = bi_support(a_ir, a_rgb);
  const Tensor x_tilde =
      recalibrate(x_ir, maps, params.alpha, params.beta, params.reduction);
  const FusedFeatures staged = guide_and_fuse(x_rgb, x_tilde, params);

  CHECK(oracle::bitwise_equal(got.x_tilde_ir, x_tilde));
  CHECK(oracle::bitwise_equal(got.f_fuse, staged.f_fuse));
  CHECK(oracle::bitwise_equal(got.w_att, staged.w_att));

  // and the fuse convolution against the dense oracle
  const Tensor cat = concat_channels(staged.x_hat_rgb, staged.x_tilde_ir_align);
  CHECK(oracle::max_abs_diff(got.f_fuse, oracle::conv2d(cat, params.fuse_kernel, 1)) <
        1e-12);
}

TEST_CASE("init produces the documented shapes and defaults") {
  Rng rng(69);
  const FusionParams p = init_fusion_params(5, 3, 8, 4, rng);
  CHECK(p.w_q.shape() == Shape{8, 4});
  CHECK(p.w_k_rgb.shape() == Shape{5, 4});
  CHECK(p.w_k_ir.shape() == Shape{3, 4});
  CHECK(p.psi.shape() == Shape{5, 3, 1, 1});
  CHECK(p.phi.shape() == Shape{1, 5, 1, 1});
  CHECK(p.fuse_kernel.shape() == Shape{5, 10, 3, 3});
  CHECK(p.alpha == 0.5);
  CHECK(p.beta == 0.5);
  CHECK(p.d_k == 4);
  CHECK(p.reduction == CategoryReduction::kMax);
  CHECK_THROWS_AS(init_fusion_params(0, 3, 8, 4, rng), ParamError);
}

}  // TEST_SUITE
