#include "fuselab/degradation.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "fuselab/errors.hpp"

namespace fuselab {
namespace {

std::uint8_t clamp_round(double v) {
  long long r = std::llround(v);
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return std::uint8_t(r);
}

// Reflect with the edge pixel included: ... 1 0 | 0 1 ... n-2 n-1 | n-1 n-2 ...
std::size_t reflect_index(long long i, std::size_t n) {
  const long long nn = (long long)n;
  while (i < 0 || i >= nn) {
    if (i < 0) i = -i - 1;
    else i = 2 * nn - 1 - i;
  }
  return std::size_t(i);
}

std::vector<double> blur_kernel(int k) {
  const int radius = (k - 1) / 2;
  const double sigma = 0.3 * (double(radius) - 1.0) + 0.8;
  std::vector<double> weights(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = double(i - radius);
    weights[std::size_t(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += weights[std::size_t(i)];
  }
  for (double& w : weights) w /= sum;
  return weights;
}

void check_kernel(int k, const char* who) {
  if (k < 1) throw ParamError(std::string(who) + ": kernel size must be >= 1, got " +
                              std::to_string(k));
  if (k % 2 == 0) {
    throw ParamError(std::string(who) + ": kernel size must be odd, got " +
                     std::to_string(k));
  }
}

}  // namespace

std::vector<DegradationLevel> default_degradation_levels() {
  return {
      {0, 1.00, 1, 0.0},  {1, 0.70, 5, 8.0},   {2, 0.55, 9, 15.0},
      {3, 0.40, 15, 22.0}, {4, 0.28, 21, 32.0}, {5, 0.18, 29, 42.0},
      {6, 0.12, 37, 55.0}, {7, 0.07, 45, 65.0}, {8, 0.04, 55, 80.0},
      {9, 0.02, 65, 95.0}, {10, 0.01, 81, 110.0},
  };
}

Image8 gaussian_blur(const Image8& img, int k) {
  check_kernel(k, "gaussian_blur");
  if (k == 1) return img;
  const std::vector<double> w = blur_kernel(k);
  const int radius = (k - 1) / 2;
  const std::size_t h = img.height;
  const std::size_t wd = img.width;
  Image8 out(img.channels, h, wd);
  std::vector<double> horiz(h * wd);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const std::size_t xs = reflect_index((long long)x + t, wd);
          acc += w[std::size_t(t + radius)] * double(img.at(c, y, xs));
        }
        horiz[y * wd + x] = acc;
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const std::size_t ys = reflect_index((long long)y + t, h);
          acc += w[std::size_t(t + radius)] * horiz[ys * wd + x];
        }
        out.at(c, y, x) = clamp_round(acc);
      }
    }
  }
  return out;
}

Image8 degrade(const Image8& img, const DegradationLevel& level, Rng& rng,
               const DegradeOptions& options) {
  if (level.level < 0 || level.level > 10) {
    throw ParamError("degrade: level must be in 0..10, got " +
                     std::to_string(level.level));
  }
  if (level.level == 0) return img;
  if (level.gamma <= 0.0) {
    throw ParamError("degrade: brightness factor must be positive");
  }
  check_kernel(level.kernel, "degrade");
  if (level.sigma_noise < 0.0) {
    throw ParamError("degrade: noise std must be non-negative");
  }
  Image8 out(img.channels, img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp_round(double(img.data[i]) * level.gamma);
  }
  out = gaussian_blur(out, level.kernel);
  if (options.apply_noise && level.sigma_noise > 0.0) {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] =
          clamp_round(double(out.data[i]) + rng.gaussian(0.0, level.sigma_noise));
    }
  }
  return out;
}

OccupancyResult otsu_occupancy(const Image8& ir, const BoxAnnotation& box) {
  if (ir.channels != 1) {
    throw ParamError("otsu_occupancy: image must be single-channel, got " +
                     std::to_string(ir.channels) + " channels");
  }
  long x1 = box.x1 < 0 ? 0 : box.x1;
  long y1 = box.y1 < 0 ? 0 : box.y1;
  long x2 = box.x2 > (long)ir.width ? (long)ir.width : box.x2;
  long y2 = box.y2 > (long)ir.height ? (long)ir.height : box.y2;
  if (x2 <= x1 || y2 <= y1) {
    throw ParamError("otsu_occupancy: empty box after clamping to image bounds");
  }
  std::array<std::size_t, 256> hist{};
  for (long y = y1; y < y2; ++y) {
    for (long x = x1; x < x2; ++x) {
      ++hist[ir.at(0, std::size_t(y), std::size_t(x))];
    }
  }
  const double total = double((x2 - x1) * (y2 - y1));

  std::size_t occupied_bins = 0;
  int only_value = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[std::size_t(v)] > 0) {
      ++occupied_bins;
      only_value = v;
    }
  }
  if (occupied_bins <= 1) {
    OccupancyResult res;
    res.r = 0.0;
    res.threshold = only_value;
    res.degenerate = true;
    return res;
  }

  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += double(v) * double(hist[std::size_t(v)]);
  int best_t = 0;
  double best_var = -1.0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (int t = 0; t < 256; ++t) {
    w0 += double(hist[std::size_t(t)]);
    sum0 += double(t) * double(hist[std::size_t(t)]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }

  std::size_t foreground = 0;
  for (int v = best_t + 1; v < 256; ++v) foreground += hist[std::size_t(v)];
  OccupancyResult res;
  res.r = double(foreground) / total;
  res.threshold = best_t;
  res.degenerate = false;
  return res;
}

SynthScene synth_scene(Rng& rng, const SceneSpec& spec) {
  if (spec.width == 0 || spec.height == 0) {
    throw ParamError("synth_scene: canvas dimensions must be positive");
  }
  if (spec.min_size == 0 || spec.min_size > spec.max_size) {
    throw ParamError("synth_scene: need 0 < min_size <= max_size");
  }
  if (spec.max_size > spec.width || spec.max_size > spec.height) {
    throw ParamError("synth_scene: objects of size " + std::to_string(spec.max_size) +
                     " exceed the " + std::to_string(spec.width) + "x" +
                     std::to_string(spec.height) + " canvas");
  }
  if (spec.ir_background < 0 || spec.ir_background > 255 ||
      spec.ir_foreground < 0 || spec.ir_foreground > 255) {
    throw ParamError("synth_scene: IR intensities must lie in [0,255]");
  }

  SynthScene scene;
  scene.ir = Image8(1, spec.height, spec.width, std::uint8_t(spec.ir_background));
  scene.rgb = Image8(3, spec.height, spec.width);
  const std::array<int, 3> bg_base = {52, 56, 64};
  const std::array<int, 3> fg_base = {198, 172, 136};
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const int jitter = int(rng.below(33)) - 16;
      for (std::size_t c = 0; c < 3; ++c) {
        scene.rgb.at(c, y, x) = clamp_round(double(bg_base[c] + jitter));
      }
    }
  }
  for (std::size_t i = 0; i < spec.objects; ++i) {
    const std::size_t sw =
        spec.min_size + rng.below(spec.max_size - spec.min_size + 1);
    const std::size_t sh =
        spec.min_size + rng.below(spec.max_size - spec.min_size + 1);
    const std::size_t x0 = rng.below(spec.width - sw + 1);
    const std::size_t y0 = rng.below(spec.height - sh + 1);
    for (std::size_t y = y0; y < y0 + sh; ++y) {
      for (std::size_t x = x0; x < x0 + sw; ++x) {
        scene.ir.at(0, y, x) = std::uint8_t(spec.ir_foreground);
        const int jitter = int(rng.below(25)) - 12;
        for (std::size_t c = 0; c < 3; ++c) {
          scene.rgb.at(c, y, x) = clamp_round(double(fg_base[c] + jitter));
        }
      }
    }
    scene.boxes.push_back({long(x0), long(y0), long(x0 + sw), long(y0 + sh)});
  }
  return scene;
}

}  // namespace fuselab
