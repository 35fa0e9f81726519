#include "fuselab/freq_backbone.hpp"

#include <algorithm>
#include <cmath>

#include "fuselab/errors.hpp"

namespace fuselab {

namespace {

constexpr double kInsideGate = 0.88;

Tensor gaussian_tensor(Shape shape, Rng& rng, double sigma) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
  return t;
}

}  // namespace

FreqMask init_freq_mask(std::size_t h, std::size_t w, double r_low) {
  if (h == 0 || w == 0) throw ParamError("init_freq_mask: empty plane");
  if (!(r_low > 0.0 && r_low < 1.0)) {
    throw ParamError("init_freq_mask: r_low must lie in (0,1), got " +
                     std::to_string(r_low));
  }
  const double logit = std::log(kInsideGate / (1.0 - kInsideGate));
  struct Cell {
    std::size_t rad2, u, v;
  };
  std::vector<Cell> cells;
  cells.reserve(h * w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) cells.push_back({u * u + v * v, u, v});
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.rad2 != b.rad2) return a.rad2 < b.rad2;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  const std::size_t total = h * w;
  const std::size_t inside = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(r_low * static_cast<double>(total))));
  FreqMask mask{Tensor(Shape{h, w}, -logit)};
  for (std::size_t i = 0; i < std::min(inside, total); ++i) {
    mask.logits[cells[i].u * w + cells[i].v] = logit;
  }
  return mask;
}

std::pair<Tensor, Tensor> freq_decompose(const Tensor& x, const FreqMask& mask) {
  if (x.rank() != 3) {
    throw ShapeError("freq_decompose: X must be {C,H,W}, got " + shape_str(x.shape()));
  }
  if (mask.logits.rank() != 2 || mask.logits.shape()[0] != x.shape()[1] ||
      mask.logits.shape()[1] != x.shape()[2]) {
    throw ShapeError("freq_decompose: mask " + shape_str(mask.logits.shape()) +
                     " does not cover the coefficient grid of " + shape_str(x.shape()));
  }
  return freq_decompose_any(x, mask.logits);
}

Tensor ghost_encode(const Tensor& x, const GhostParams& params) {
  if (params.primary.rank() != 4 || params.primary.shape()[2] != 1 ||
      params.primary.shape()[3] != 1) {
    throw ShapeError("ghost_encode: primary kernel must be {C/2, C_in, 1, 1}, got " +
                     shape_str(params.primary.shape()));
  }
  if (params.cheap.rank() != 3 ||
      params.cheap.shape()[0] != params.primary.shape()[0]) {
    throw ShapeError("ghost_encode: cheap kernel must cover " +
                     std::to_string(params.primary.shape()[0]) + " channels, got " +
                     shape_str(params.cheap.shape()));
  }
  return ghost_encode_any(x, params.primary, params.cheap);
}

Tensor branch_encode_recombine(const Tensor& x_l, const Tensor& x_h,
                               const BranchParams& params) {
  if (x_l.shape() != x_h.shape()) {
    throw ShapeError("branch_encode_recombine: branch shapes differ, " +
                     shape_str(x_l.shape()) + " vs " + shape_str(x_h.shape()));
  }
  return add(ghost_encode(x_l, params.phi_l), ghost_encode(x_h, params.phi_h));
}

Tensor se_recalibrate(const Tensor& x, const SeParams& params) {
  if (x.rank() != 3) {
    throw ShapeError("se_recalibrate: X must be {C,H,W}, got " + shape_str(x.shape()));
  }
  const std::size_t c = x.shape()[0];
  if (c % 4 != 0) {
    throw ParamError("se_recalibrate: channel count " + std::to_string(c) +
                     " not divisible by the reduction 4");
  }
  if (params.w1.rank() != 2 || params.w1.shape()[0] != c / 4 ||
      params.w1.shape()[1] != c || params.w2.rank() != 2 ||
      params.w2.shape()[0] != c || params.w2.shape()[1] != c / 4) {
    throw ShapeError("se_recalibrate: weights must be {C/4, C} and {C, C/4}, got " +
                     shape_str(params.w1.shape()) + " and " +
                     shape_str(params.w2.shape()));
  }
  return se_recalibrate_any(x, params.w1, params.w2);
}

Tensor freq_block_forward(const Tensor& x, const FreqMask& mask,
                          const BranchParams& params) {
  auto [x_l, x_h] = freq_decompose(x, mask);
  return se_recalibrate(branch_encode_recombine(x_l, x_h, params), params.se);
}

BranchParams init_branch_params(std::size_t c, Rng& rng) {
  if (c == 0 || c % 4 != 0) {
    throw ParamError("init_branch_params: channel count must be a positive multiple "
                     "of 4, got " + std::to_string(c));
  }
  const std::size_t half = c / 2;
  const double sp = 1.0 / std::sqrt(static_cast<double>(c));
  BranchParams p;
  p.phi_l.primary = gaussian_tensor({half, c, 1, 1}, rng, sp);
  p.phi_l.cheap = gaussian_tensor({half, 3, 3}, rng, 1.0 / 3.0);
  p.phi_h.primary = gaussian_tensor({half, c, 1, 1}, rng, sp);
  p.phi_h.cheap = gaussian_tensor({half, 3, 3}, rng, 1.0 / 3.0);
  p.se.w1 = gaussian_tensor({c / 4, c}, rng, sp);
  p.se.w2 = gaussian_tensor({c, c / 4}, rng, 2.0 / std::sqrt(static_cast<double>(c)));
  return p;
}

}  // namespace fuselab
