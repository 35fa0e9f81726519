#include <cmath>
#include <vector>

#include "doctest.h"
#include "fuselab/baselines.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/rng.hpp"
#include "oracles.hpp"

using namespace fuselab;

namespace {

// Straight-line recomputation of the direct spatial attention path.
VanillaFusion vanilla_oracle(const Tensor& x_rgb, const Tensor& x_ir,
                             const BaselineParams& p) {
  const std::size_t c_rgb = x_rgb.shape()[0], c_ir = x_ir.shape()[0];
  const std::size_t h = x_ir.shape()[1], w = x_ir.shape()[2], hw = h * w;
  const std::size_t dk = p.d_k;
  std::vector<double> q(hw * dk, 0.0), k(hw * dk, 0.0), v(hw * c_ir, 0.0);
  for (std::size_t pix = 0; pix < hw; ++pix) {
    for (std::size_t j = 0; j < dk; ++j) {
      for (std::size_t c = 0; c < c_ir; ++c)
        q[pix * dk + j] += x_ir[c * hw + pix] * p.w_q[c * dk + j];
      for (std::size_t c = 0; c < c_rgb; ++c)
        k[pix * dk + j] += x_rgb[c * hw + pix] * p.w_k[c * dk + j];
    }
    for (std::size_t j = 0; j < c_ir; ++j)
      for (std::size_t c = 0; c < c_rgb; ++c)
        v[pix * c_ir + j] += x_rgb[c * hw + pix] * p.w_v[c * c_ir + j];
  }
  VanillaFusion out;
  out.attention = Tensor::zeros({hw, hw});
  out.response = Tensor::zeros({c_ir, h, w});
  const double inv = 1.0 / std::sqrt(double(dk));
  for (std::size_t i = 0; i < hw; ++i) {
    for (std::size_t j = 0; j < hw; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dk; ++d) dot += q[i * dk + d] * k[j * dk + d];
      out.attention[i * hw + j] = 1.0 / (1.0 + std::exp(-dot * inv));
    }
  }
  for (std::size_t c = 0; c < c_ir; ++c) {
    for (std::size_t pix = 0; pix < hw; ++pix) {
      double acc = 0.0;
      for (std::size_t j = 0; j < hw; ++j)
        acc += out.attention[pix * hw + j] * v[j * c_ir + c];
      out.response[c * hw + pix] = acc;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("vanilla attention matches the position-pair oracle") {
  Rng rng(91);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t c_rgb = 3, c_ir = 2, h = 3, w = 4;
    Rng init_rng(Rng::mix(91, std::uint64_t(trial)));
    const BaselineParams p = init_baseline_params(c_rgb, c_ir, 6, 4, init_rng);
    const Tensor x_rgb = oracle::randn(rng, {c_rgb, h, w});
    const Tensor x_ir = oracle::randn(rng, {c_ir, h, w});
    const VanillaFusion got = vanilla_direct_fuse(x_rgb, x_ir, p);
    const VanillaFusion want = vanilla_oracle(x_rgb, x_ir, p);
    REQUIRE(got.attention.shape() == Shape{h * w, h * w});
    REQUIRE(got.response.shape() == Shape{c_ir, h, w});
    CHECK(oracle::max_abs_diff(got.attention, want.attention) < 1e-12);
    CHECK(oracle::max_abs_diff(got.response, want.response) < 1e-12);
    for (std::size_t i = 0; i < got.attention.size(); ++i) {
      CHECK(got.attention[i] > 0.0);
      CHECK(got.attention[i] < 1.0);
    }
  }
}

TEST_CASE("vanilla validates inputs") {
  Rng rng(92);
  BaselineParams p = init_baseline_params(3, 2, 6, 4, rng);
  const Tensor x_rgb = oracle::randn(rng, {3, 4, 4});
  const Tensor x_ir = oracle::randn(rng, {2, 4, 4});
  CHECK_THROWS_AS(vanilla_direct_fuse(reshape(x_rgb, {3, 16}), x_ir, p), ShapeError);
  CHECK_THROWS_AS(
      vanilla_direct_fuse(x_rgb, oracle::randn(rng, {2, 5, 4}), p), ShapeError);
  BaselineParams bad = p;
  bad.w_q = Tensor::zeros({3, 4});
  CHECK_THROWS_AS(vanilla_direct_fuse(x_rgb, x_ir, bad), ShapeError);
  bad = p;
  bad.d_k = 0;
  CHECK_THROWS_AS(vanilla_direct_fuse(x_rgb, x_ir, bad), ParamError);
}

TEST_CASE("zero prompt MLP leaves the response bit for bit") {
  Rng rng(93);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c_rgb = 1 + rng.below(4);
    const std::size_t c_ir = 1 + rng.below(4);
    const std::size_t h = 2 + rng.below(3), w = 2 + rng.below(3);
    const std::size_t d_t = 4, d_k = 3, m = 1 + rng.below(3);
    Rng init_rng(Rng::mix(93, std::uint64_t(trial)));
    BaselineParams p = init_baseline_params(c_rgb, c_ir, d_t, d_k, init_rng);
    const Tensor x_rgb = oracle::randn(rng, {c_rgb, h, w});
    const Tensor x_ir = oracle::randn(rng, {c_ir, h, w});
    const Tensor t = oracle::randn(rng, {m, d_t});
    const VanillaFusion vanilla = vanilla_direct_fuse(x_rgb, x_ir, p);
    p.mlp_w1 = Tensor::zeros(p.mlp_w1.shape());
    p.mlp_b1 = Tensor::zeros(p.mlp_b1.shape());
    p.mlp_w2 = Tensor::zeros(p.mlp_w2.shape());
    p.mlp_b2 = Tensor::zeros(p.mlp_b2.shape());
    const Tensor modulated = conditional_prompt_fuse(vanilla.response, t, p);
    CHECK(oracle::bitwise_equal(modulated, vanilla.response));
  }
}

TEST_CASE("prompt modulation matches a channelwise oracle") {
  Rng rng(94);
  const std::size_t c_ir = 3, h = 2, w = 3, d_t = 6, m = 2;
  const BaselineParams p = init_baseline_params(4, c_ir, d_t, 4, rng);
  const Tensor r = oracle::randn(rng, {c_ir, h, w});
  const Tensor t = oracle::randn(rng, {m, d_t});
  const Tensor got = conditional_prompt_fuse(r, t, p);

  const std::size_t hidden = d_t / 2;
  std::vector<double> pooled(d_t, 0.0);
  for (std::size_t j = 0; j < d_t; ++j) {
    for (std::size_t i = 0; i < m; ++i) pooled[j] += t[i * d_t + j];
    pooled[j] /= double(m);
  }
  std::vector<double> h1(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    for (std::size_t i = 0; i < d_t; ++i) h1[j] += pooled[i] * p.mlp_w1[i * hidden + j];
    h1[j] += p.mlp_b1[j];
    h1[j] = 0.5 * h1[j] * (1.0 + std::erf(h1[j] / std::sqrt(2.0)));
  }
  std::vector<double> h2(2 * c_ir, 0.0);
  for (std::size_t j = 0; j < 2 * c_ir; ++j) {
    for (std::size_t i = 0; i < hidden; ++i)
      h2[j] += h1[i] * p.mlp_w2[i * 2 * c_ir + j];
    h2[j] += p.mlp_b2[j];
  }
  for (std::size_t c = 0; c < c_ir; ++c) {
    for (std::size_t pix = 0; pix < h * w; ++pix) {
      const double want = r[c * h * w + pix] * (1.0 + h2[c]) + h2[c_ir + c];
      CHECK(got[c * h * w + pix] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("prompt path validates text width and weights") {
  Rng rng(95);
  const BaselineParams p = init_baseline_params(3, 2, 6, 4, rng);
  const Tensor r = oracle::randn(rng, {2, 3, 3});
  CHECK_THROWS_AS(conditional_prompt_fuse(r, oracle::randn(rng, {2, 5}), p),
                  ParamError);
  CHECK_THROWS_AS(conditional_prompt_fuse(r, oracle::randn(rng, {2, 4}), p),
                  ShapeError);  // widths no longer match the stored MLP
  CHECK_THROWS_AS(conditional_prompt_fuse(reshape(r, {2, 9}), oracle::randn(rng, {2, 6}), p),
                  ShapeError);
}

TEST_CASE("init shapes and parity guard") {
  Rng rng(96);
  const BaselineParams p = init_baseline_params(5, 3, 8, 4, rng);
  CHECK(p.w_q.shape() == Shape{3, 4});
  CHECK(p.w_k.shape() == Shape{5, 4});
  CHECK(p.w_v.shape() == Shape{5, 3});
  CHECK(p.mlp_w1.shape() == Shape{8, 4});
  CHECK(p.mlp_b1.shape() == Shape{4});
  CHECK(p.mlp_w2.shape() == Shape{4, 6});
  CHECK(p.mlp_b2.shape() == Shape{6});
  CHECK(p.d_k == 4);
  for (std::size_t i = 0; i < p.mlp_b1.size(); ++i) CHECK(p.mlp_b1[i] == 0.0);
  for (std::size_t i = 0; i < p.mlp_b2.size(); ++i) CHECK(p.mlp_b2[i] == 0.0);
  CHECK_THROWS_AS(init_baseline_params(3, 2, 5, 4, rng), ParamError);
  CHECK_THROWS_AS(init_baseline_params(0, 2, 6, 4, rng), ParamError);
}

}  // TEST_SUITE
