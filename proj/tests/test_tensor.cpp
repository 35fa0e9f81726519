#include <cmath>
#include <vector>

#include "doctest.h"
#include "fuselab/errors.hpp"
#include "fuselab/rng.hpp"
#include "fuselab/tensor.hpp"
#include "oracles.hpp"

using namespace fuselab;

TEST_SUITE("tensor") {

TEST_CASE("construction and element access") {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t.at2(1, 2) == 6.0);
  CHECK(shape_numel({2, 3, 4}) == 24);
  CHECK(shape_str({2, 3}) == "(2, 3)");
  CHECK(Tensor::scalar(2.5).shape() == Shape{1});
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("elementwise ops") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 2}, {10, 20, 30, 40});
  CHECK(add(a, b).vec() == std::vector<double>{11, 22, 33, 44});
  CHECK(sub(b, a).vec() == std::vector<double>{9, 18, 27, 36});
  CHECK(mul(a, b).vec() == std::vector<double>{10, 40, 90, 160});
  CHECK(scale(a, 2.0).vec() == std::vector<double>{2, 4, 6, 8});
  CHECK(add_scalar(a, 1.0).vec() == std::vector<double>{2, 3, 4, 5});
  CHECK(one_minus(a).vec() == std::vector<double>{0, -1, -2, -3});
  CHECK_THROWS_AS(add(a, Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("scalar-tensor arithmetic") {
  Tensor a({3}, {2, 4, 6});
  CHECK(scale_by(a, Tensor::scalar(0.5)).vec() == std::vector<double>{1, 2, 3});
  CHECK(div_by(a, Tensor::scalar(2.0)).vec() == std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(scale_by(a, Tensor::zeros({2})), ShapeError);
  CHECK_THROWS_AS(div_by(a, Tensor::zeros({2})), ShapeError);
}

TEST_CASE("matmul matches the loop oracle") {
  Rng rng(3);
  const Tensor a = oracle::randn(rng, {7, 5});
  const Tensor b = oracle::randn(rng, {5, 9});
  const Tensor got = matmul(a, b);
  const Tensor want = oracle::matmul(a, b);
  CHECK(got.shape() == Shape{7, 9});
  CHECK(oracle::max_abs_diff(got, want) < 1e-12);
  CHECK_THROWS_AS(matmul(a, Tensor::zeros({4, 9})), ShapeError);
  CHECK_THROWS_AS(matmul(a, Tensor::zeros({5, 9, 1})), ShapeError);
}

TEST_CASE("transpose and reshape") {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor at = transpose(a);
  CHECK(at.shape() == Shape{3, 2});
  CHECK(at.at2(2, 1) == 6.0);
  CHECK(oracle::bitwise_equal(transpose(at), a));
  const Tensor r = reshape(a, {3, 2});
  CHECK(r.vec() == a.vec());
  CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeError);
}

TEST_CASE("nonlinearities") {
  Tensor x({5}, {-2, -0.5, 0, 0.5, 2});
  const Tensor s = sigmoid(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(s[i] == doctest::Approx(1.0 / (1.0 + std::exp(-x[i]))).epsilon(1e-15));
  }
  CHECK(relu(x).vec() == std::vector<double>{0, 0, 0, 0.5, 2});
  const Tensor g = gelu(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double want = 0.5 * x[i] * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
    CHECK(g[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("softmax rows") {
  Rng rng(5);
  const Tensor a = oracle::randn(rng, {4, 6}, 3.0);
  const Tensor s = softmax_rows(a);
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(s.at2(i, j) > 0.0);
      row += s.at2(i, j);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
  // shift invariance, including shifts that would overflow a naive exp
  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 800.0;
  CHECK(oracle::max_abs_diff(softmax_rows(b), s) < 1e-12);
}

TEST_CASE("log softmax keeps tiny probabilities exact") {
  Tensor a({1, 2}, {40.0, 0.0});
  const Tensor ls = log_softmax_rows(a);
  // the max entry catches -log1p(exp(-40)) ~ -4.25e-18, not a flushed zero
  CHECK(ls.at2(0, 0) != 0.0);
  CHECK(ls.at2(0, 0) == doctest::Approx(-std::log1p(std::exp(-40.0))).epsilon(1e-12));
  CHECK(ls.at2(0, 1) == doctest::Approx(-40.0 - std::log1p(std::exp(-40.0))).epsilon(1e-15));

  Rng rng(6);
  const Tensor b = oracle::randn(rng, {3, 5}, 2.0);
  const Tensor sm = softmax_rows(b);
  const Tensor lsm = log_softmax_rows(b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(std::exp(lsm[i]) == doctest::Approx(sm[i]).epsilon(1e-12));
  }
}

TEST_CASE("column reductions") {
  Tensor a({3, 2}, {1, 5, 4, 2, 3, 9});
  CHECK(colwise_max(a).vec() == std::vector<double>{4, 9});
  CHECK(colwise_mean(a).shape() == Shape{2});
  CHECK(colwise_mean(a).vec() == std::vector<double>{8.0 / 3.0, 16.0 / 3.0});
  CHECK(colwise_argmax(a) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("spatial broadcasts and pooling") {
  Tensor x({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(global_avg_pool(x).vec() == std::vector<double>{2.5, 6.5});
  Tensor m({2, 2}, {1, 0, 2, 1});
  CHECK(mul_spatial(x, m).vec() == std::vector<double>{1, 0, 6, 4, 5, 0, 14, 8});
  Tensor g({2}, {2, 3});
  CHECK(mul_channelwise(x, g).vec() == std::vector<double>{2, 4, 6, 8, 15, 18, 21, 24});
  Tensor bias({2}, {10, 20});
  CHECK(add_channel_bias(x, bias).vec() ==
        std::vector<double>{11, 12, 13, 14, 25, 26, 27, 28});
  CHECK_THROWS_AS(mul_spatial(x, Tensor::zeros({3, 2})), ShapeError);
  CHECK_THROWS_AS(mul_channelwise(x, Tensor::zeros({3})), ShapeError);
}

TEST_CASE("concat and slice") {
  Tensor a({1, 3}, {1, 2, 3});
  Tensor b({2, 3}, {4, 5, 6, 7, 8, 9});
  const Tensor cr = concat_rows(a, b);
  CHECK(cr.shape() == Shape{3, 3});
  CHECK(cr.vec() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(oracle::bitwise_equal(slice_rows(cr, 1, 3), b));
  CHECK_THROWS_AS(slice_rows(cr, 2, 2), ShapeError);
  CHECK_THROWS_AS(slice_rows(cr, 1, 4), ShapeError);

  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  Tensor y({2, 2, 2}, {5, 6, 7, 8, 9, 10, 11, 12});
  const Tensor cc = concat_channels(x, y);
  CHECK(cc.shape() == Shape{3, 2, 2});
  CHECK(cc.vec() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  CHECK_THROWS_AS(concat_channels(x, Tensor::zeros({2, 3, 2})), ShapeError);
}

TEST_CASE("conv2d matches the loop oracle") {
  Rng rng(8);
  const Tensor x = oracle::randn(rng, {3, 6, 5});
  const Tensor k1 = oracle::randn(rng, {4, 3, 1, 1});
  const Tensor k3 = oracle::randn(rng, {2, 3, 3, 3});
  CHECK(oracle::max_abs_diff(conv2d(x, k1, 0), oracle::conv2d(x, k1, 0)) < 1e-12);
  CHECK(oracle::max_abs_diff(conv2d(x, k3, 1), oracle::conv2d(x, k3, 1)) < 1e-12);
  CHECK(conv2d(x, k3, 1).shape() == Shape{2, 6, 5});
  CHECK(conv2d(x, k3, 0).shape() == Shape{2, 4, 3});
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({2, 3, 2, 2}), 0), ParamError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({2, 4, 3, 3}), 1), ShapeError);
}

TEST_CASE("depthwise conv matches the loop oracle") {
  Rng rng(9);
  const Tensor x = oracle::randn(rng, {3, 5, 5});
  const Tensor k = oracle::randn(rng, {3, 3, 3});
  CHECK(oracle::max_abs_diff(depthwise_conv2d(x, k, 1), oracle::depthwise(x, k, 1)) <
        1e-12);
  CHECK(depthwise_conv2d(x, k, 1).shape() == Shape{3, 5, 5});
  CHECK_THROWS_AS(depthwise_conv2d(x, Tensor::zeros({3, 2, 2}), 0), ParamError);
  CHECK_THROWS_AS(depthwise_conv2d(x, Tensor::zeros({2, 3, 3}), 1), ShapeError);
}

TEST_CASE("dct2 matches the direct definition") {
  Rng rng(10);
  const Tensor x = oracle::randn(rng, {5, 7});
  const Tensor coef = dct2_forward(x);
  CHECK(oracle::max_abs_diff(coef, oracle::dct2(x)) < 1e-10);
  CHECK(oracle::max_abs_diff(dct2_inverse(coef), x) < 1e-12);
  CHECK(oracle::max_abs_diff(dct2_inverse(coef), oracle::idct2(coef)) < 1e-10);
}

TEST_CASE("dct2 is orthonormal (Parseval)") {
  Rng rng(11);
  for (std::size_t n : {4, 9, 16}) {
    const Tensor x = oracle::randn(rng, {n, n});
    const Tensor coef = dct2_forward(x);
    double ex = 0.0, ec = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      ex += x[i] * x[i];
      ec += coef[i] * coef[i];
    }
    CHECK(std::abs(ex - ec) < 1e-9);
  }
}

TEST_CASE("channelwise dct equals per-plane dct") {
  Rng rng(12);
  const Tensor x = oracle::randn(rng, {3, 4, 6});
  const Tensor coef = dct2_forward_channels(x);
  for (std::size_t c = 0; c < 3; ++c) {
    Tensor plane = Tensor::zeros({4, 6});
    for (std::size_t i = 0; i < 24; ++i) plane[i] = x[c * 24 + i];
    const Tensor want = dct2_forward(plane);
    for (std::size_t i = 0; i < 24; ++i) {
      CHECK(coef[c * 24 + i] == want[i]);
    }
  }
  CHECK(oracle::max_abs_diff(dct2_inverse_channels(coef), x) < 1e-12);
}

TEST_CASE("l2 row normalization") {
  Tensor a({2, 2}, {3, 4, 0.6, 0.8});
  const Tensor n = l2_normalize_rows(a);
  CHECK(n.at2(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n.at2(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  for (std::size_t i = 0; i < 2; ++i) {
    const double norm = std::hypot(n.at2(i, 0), n.at2(i, 1));
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  }
  Tensor z({2, 2}, {1, 2, 0, 0});
  CHECK_THROWS_AS(l2_normalize_rows(z), NumericError);
}

TEST_CASE("scalar reductions") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  CHECK(sum_all(a).vec() == std::vector<double>{10});
  CHECK(mean_all(a).vec() == std::vector<double>{2.5});
  CHECK(diag_mean(a).vec() == std::vector<double>{2.5});
  CHECK_THROWS_AS(diag_mean(Tensor::zeros({2, 3})), ShapeError);
  CHECK(pairs_mean(a, {{0, 1}, {1, 0}}).vec() == std::vector<double>{2.5});
  CHECK_THROWS_AS(pairs_mean(a, {}), ParamError);
  CHECK_THROWS_AS(pairs_mean(a, {{2, 0}}), ParamError);
}

}  // TEST_SUITE
