#include <cmath>
#include <vector>

#include "doctest.h"
#include "fuselab/degradation.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/rng.hpp"

using namespace fuselab;

namespace {

// Dense 2-D convolution with the same normalized Gaussian and edge-inclusive
// reflection, rounded once. Independent of the separable implementation.
Image8 blur_oracle(const Image8& img, int k) {
  const int radius = (k - 1) / 2;
  const double sigma = 0.3 * (double(radius) - 1.0) + 0.8;
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = double(i - radius);
    w[std::size_t(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[std::size_t(i)];
  }
  for (double& x : w) x /= sum;
  auto reflect = [](long i, long n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      else i = 2 * n - 1 - i;
    }
    return std::size_t(i);
  };
  Image8 out(img.channels, img.height, img.width);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (long y = 0; y < long(img.height); ++y) {
      for (long x = 0; x < long(img.width); ++x) {
        double acc = 0.0;
        for (int ty = -radius; ty <= radius; ++ty) {
          for (int tx = -radius; tx <= radius; ++tx) {
            acc += w[std::size_t(ty + radius)] * w[std::size_t(tx + radius)] *
                   double(img.at(c, reflect(y + ty, long(img.height)),
                                 reflect(x + tx, long(img.width))));
          }
        }
        long long r = std::llround(acc);
        if (r < 0) r = 0;
        if (r > 255) r = 255;
        out.at(c, std::size_t(y), std::size_t(x)) = std::uint8_t(r);
      }
    }
  }
  return out;
}

Image8 constant_gray(std::uint8_t v, std::size_t side = 16) {
  return Image8(1, side, side, v);
}

double mean_of(const Image8& img) {
  double s = 0.0;
  for (std::uint8_t b : img.data) s += double(b);
  return s / double(img.data.size());
}

}  // namespace

TEST_SUITE("degradation") {

TEST_CASE("the severity ladder is monotone in every knob") {
  const auto levels = default_degradation_levels();
  REQUIRE(levels.size() == 11);
  for (int i = 0; i <= 10; ++i) CHECK(levels[std::size_t(i)].level == i);
  CHECK(levels[0].gamma == 1.00);
  CHECK(levels[0].kernel == 1);
  CHECK(levels[0].sigma_noise == 0.0);
  CHECK(levels[1].gamma == 0.70);
  CHECK(levels[1].kernel == 5);
  CHECK(levels[1].sigma_noise == 8.0);
  CHECK(levels[5].gamma == 0.18);
  CHECK(levels[5].kernel == 29);
  CHECK(levels[5].sigma_noise == 42.0);
  CHECK(levels[10].gamma == 0.01);
  CHECK(levels[10].kernel == 81);
  CHECK(levels[10].sigma_noise == 110.0);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    CHECK(levels[i].gamma < levels[i - 1].gamma);
    CHECK(levels[i].kernel > levels[i - 1].kernel);
    CHECK(levels[i].sigma_noise > levels[i - 1].sigma_noise);
    CHECK(levels[i].kernel % 2 == 1);
  }
}

TEST_CASE("level 0 is a bit-identical copy that draws no randomness") {
  Rng fill(121);
  Image8 img(3, 8, 8);
  for (auto& b : img.data) b = std::uint8_t(fill.below(256));
  Rng rng_used(7);
  Rng rng_fresh(7);
  const Image8 out = degrade(img, default_degradation_levels()[0], rng_used);
  CHECK(out.data == img.data);
  CHECK(rng_used.next_u64() == rng_fresh.next_u64());
}

TEST_CASE("brightness lands on the expected gray per level") {
  const auto levels = default_degradation_levels();
  const std::vector<int> expected = {90, 70, 51, 36, 23, 15, 9, 5, 3, 1};
  Rng rng(122);
  DegradeOptions noiseless;
  noiseless.apply_noise = false;
  int prev = 256;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const Image8 out = degrade(constant_gray(128, 96), levels[i], rng, noiseless);
    for (std::uint8_t b : out.data) CHECK(int(b) == expected[i - 1]);
    CHECK(expected[i - 1] < prev);
    prev = expected[i - 1];
  }
}

TEST_CASE("brightness precedes blur") {
  Rng fill(123);
  Image8 img(1, 12, 12);
  for (auto& b : img.data) b = std::uint8_t(fill.below(256));
  const DegradationLevel level = {3, 0.40, 15, 22.0};
  Rng rng(1);
  DegradeOptions noiseless;
  noiseless.apply_noise = false;
  const Image8 got = degrade(img, level, rng, noiseless);
  Image8 bright(1, 12, 12);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    bright.data[i] = std::uint8_t(std::llround(double(img.data[i]) * 0.40));
  }
  const Image8 want = gaussian_blur(bright, 15);
  CHECK(got.data == want.data);
}

TEST_CASE("noise is reproducible and actually applied") {
  Image8 img = constant_gray(128);
  const DegradationLevel level = {1, 0.70, 5, 8.0};
  Rng rng_a(9), rng_b(9), rng_c(10);
  const Image8 a = degrade(img, level, rng_a);
  const Image8 b = degrade(img, level, rng_b);
  const Image8 c = degrade(img, level, rng_c);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  DegradeOptions noiseless;
  noiseless.apply_noise = false;
  Rng rng_d(9);
  const Image8 d = degrade(img, level, rng_d, noiseless);
  CHECK(a.data != d.data);
  for (std::uint8_t v : d.data) CHECK(int(v) == 90);
}

TEST_CASE("degrade validates its knobs") {
  Rng rng(124);
  const Image8 img = constant_gray(100, 4);
  CHECK_THROWS_AS(degrade(img, {11, 0.5, 3, 1.0}, rng), ParamError);
  CHECK_THROWS_AS(degrade(img, {-1, 0.5, 3, 1.0}, rng), ParamError);
  CHECK_THROWS_AS(degrade(img, {2, 0.0, 3, 1.0}, rng), ParamError);
  CHECK_THROWS_AS(degrade(img, {2, 0.5, 4, 1.0}, rng), ParamError);
  CHECK_THROWS_AS(degrade(img, {2, 0.5, 3, -1.0}, rng), ParamError);
  CHECK_THROWS_AS(gaussian_blur(img, 2), ParamError);
  CHECK_THROWS_AS(gaussian_blur(img, 0), ParamError);
}

TEST_CASE("blur identities: k=1 and constant planes") {
  Rng fill(125);
  Image8 img(1, 9, 9);
  for (auto& b : img.data) b = std::uint8_t(fill.below(256));
  CHECK(gaussian_blur(img, 1).data == img.data);
  const Image8 flat = constant_gray(173, 11);
  for (const int k : {3, 9, 21}) {
    const Image8 out = gaussian_blur(flat, k);
    for (std::uint8_t v : out.data) CHECK(int(v) == 173);
  }
}

TEST_CASE("separable blur agrees with a dense kernel") {
  Rng fill(126);
  for (const int k : {3, 5, 9}) {
    Image8 img(1, 13, 10);
    for (auto& b : img.data) b = std::uint8_t(fill.below(256));
    const Image8 got = gaussian_blur(img, k);
    const Image8 want = blur_oracle(img, k);
    for (std::size_t i = 0; i < got.data.size(); ++i) {
      CHECK(std::abs(int(got.data[i]) - int(want.data[i])) <= 1);
    }
  }
  // impulse response spreads mass symmetrically
  Image8 impulse(1, 7, 7, 0);
  impulse.at(0, 3, 3) = 255;
  const Image8 blurred = gaussian_blur(impulse, 5);
  CHECK(blurred.at(0, 3, 3) > blurred.at(0, 3, 2));
  CHECK(blurred.at(0, 3, 2) == blurred.at(0, 3, 4));
  CHECK(blurred.at(0, 2, 3) == blurred.at(0, 4, 3));
  const Image8 dense = blur_oracle(impulse, 5);
  for (std::size_t i = 0; i < dense.data.size(); ++i) {
    CHECK(std::abs(int(blurred.data[i]) - int(dense.data[i])) <= 1);
  }
}

TEST_CASE("mid-gray means decrease strictly across levels without noise") {
  const auto levels = default_degradation_levels();
  Rng rng(127);
  DegradeOptions noiseless;
  noiseless.apply_noise = false;
  const Image8 img = constant_gray(128, 32);
  double prev = mean_of(img);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const double m = mean_of(degrade(img, levels[i], rng, noiseless));
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("otsu splits a two-valued crop at the lower value") {
  Image8 img(1, 10, 10, 20);
  // 70 background pixels at 20, 30 foreground at 220
  std::size_t painted = 0;
  for (std::size_t y = 0; y < 10 && painted < 30; ++y) {
    for (std::size_t x = 0; x < 10 && painted < 30; ++x) {
      img.at(0, y, x) = 220;
      ++painted;
    }
  }
  const OccupancyResult res = otsu_occupancy(img, {0, 0, 10, 10});
  CHECK(!res.degenerate);
  CHECK(res.threshold == 20);
  CHECK(res.r == 0.30);

  Image8 inv(1, 10, 10, 220);
  painted = 0;
  for (std::size_t y = 0; y < 10 && painted < 30; ++y) {
    for (std::size_t x = 0; x < 10 && painted < 30; ++x) {
      inv.at(0, y, x) = 20;
      ++painted;
    }
  }
  const OccupancyResult res_inv = otsu_occupancy(inv, {0, 0, 10, 10});
  CHECK(res_inv.threshold == 20);
  CHECK(res_inv.r == 0.70);
}

TEST_CASE("otsu occupancy tracks the planted fraction") {
  for (const double p : {0.1, 0.4, 0.9}) {
    Image8 img(1, 20, 20, 10);
    const std::size_t want = std::size_t(std::llround(p * 400.0));
    std::size_t painted = 0;
    for (std::size_t y = 0; y < 20 && painted < want; ++y) {
      for (std::size_t x = 0; x < 20 && painted < want; ++x) {
        img.at(0, y, x) = 245;
        ++painted;
      }
    }
    const OccupancyResult res = otsu_occupancy(img, {0, 0, 20, 20});
    CHECK(std::abs(res.r - p) <= 0.02);
  }
}

TEST_CASE("otsu degenerate and validation conventions") {
  const Image8 flat = constant_gray(77, 8);
  const OccupancyResult res = otsu_occupancy(flat, {1, 1, 5, 5});
  CHECK(res.degenerate);
  CHECK(res.r == 0.0);
  CHECK(res.threshold == 77);

  Image8 rgbish(3, 4, 4);
  CHECK_THROWS_AS(otsu_occupancy(rgbish, {0, 0, 2, 2}), ParamError);
  CHECK_THROWS_AS(otsu_occupancy(flat, {5, 5, 5, 5}), ParamError);
  CHECK_THROWS_AS(otsu_occupancy(flat, {20, 0, 30, 4}), ParamError);

  // clamping keeps the overlapping part
  Image8 img(1, 6, 6, 0);
  img.at(0, 0, 0) = 200;
  const OccupancyResult clamped = otsu_occupancy(img, {-3, -3, 2, 2});
  CHECK(!clamped.degenerate);
  CHECK(clamped.r == 0.25);
}

TEST_CASE("synthetic scenes are deterministic and annotated exactly") {
  SceneSpec spec;
  spec.width = 48;
  spec.height = 40;
  spec.objects = 3;
  spec.min_size = 6;
  spec.max_size = 12;
  Rng rng_a(31), rng_b(31);
  const SynthScene a = synth_scene(rng_a, spec);
  const SynthScene b = synth_scene(rng_b, spec);
  REQUIRE(a.boxes.size() == 3);
  CHECK(a.rgb.data == b.rgb.data);
  CHECK(a.ir.data == b.ir.data);
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    CHECK(a.boxes[i].x1 == b.boxes[i].x1);
    CHECK(a.boxes[i].y2 == b.boxes[i].y2);
  }
  CHECK(a.rgb.channels == 3);
  CHECK(a.ir.channels == 1);
  CHECK(a.ir.height == 40);
  CHECK(a.ir.width == 48);

  for (const BoxAnnotation& box : a.boxes) {
    CHECK(box.x1 >= 0);
    CHECK(box.y1 >= 0);
    CHECK(box.x2 > box.x1);
    CHECK(box.y2 > box.y1);
    CHECK(box.x2 <= long(spec.width));
    CHECK(box.y2 <= long(spec.height));
    CHECK(box.x2 - box.x1 >= long(spec.min_size));
    CHECK(box.x2 - box.x1 <= long(spec.max_size));
    for (long y = box.y1; y < box.y2; ++y) {
      for (long x = box.x1; x < box.x2; ++x) {
        CHECK(int(a.ir.at(0, std::size_t(y), std::size_t(x))) == 255);
      }
    }
  }
  // background stays cold outside every box
  std::size_t cold = 0;
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      bool inside = false;
      for (const BoxAnnotation& box : a.boxes) {
        if (long(x) >= box.x1 && long(x) < box.x2 && long(y) >= box.y1 &&
            long(y) < box.y2) {
          inside = true;
        }
      }
      if (!inside) {
        CHECK(int(a.ir.at(0, y, x)) == 0);
        ++cold;
      }
    }
  }
  CHECK(cold > 0);
}

TEST_CASE("scene spec validation") {
  Rng rng(128);
  SceneSpec spec;
  spec.min_size = 0;
  CHECK_THROWS_AS(synth_scene(rng, spec), ParamError);
  spec = SceneSpec{};
  spec.min_size = 30;
  spec.max_size = 20;
  CHECK_THROWS_AS(synth_scene(rng, spec), ParamError);
  spec = SceneSpec{};
  spec.max_size = 100;
  CHECK_THROWS_AS(synth_scene(rng, spec), ParamError);
  spec = SceneSpec{};
  spec.ir_foreground = 300;
  CHECK_THROWS_AS(synth_scene(rng, spec), ParamError);
  spec = SceneSpec{};
  spec.width = 0;
  CHECK_THROWS_AS(synth_scene(rng, spec), ParamError);
}

}  // TEST_SUITE
