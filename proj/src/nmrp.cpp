#include "fuselab/nmrp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "fuselab/errors.hpp"

namespace fuselab {
namespace {

void check_level_input(const InstanceLevelInput& lv, std::size_t h, std::size_t w) {
  if (lv.x_ir.shape().size() != 3) {
    throw ShapeError("nmrp: x_ir must have rank 3 {C,h,w}, got " +
                     shape_str(lv.x_ir.shape()));
  }
  if (lv.x_ir.shape()[1] != h || lv.x_ir.shape()[2] != w) {
    throw ShapeError("nmrp: inconsistent feature grid across levels, " +
                     shape_str(lv.x_ir.shape()) + " vs " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  for (const Tensor* m : {&lv.m_cons, &lv.m_dis}) {
    if (m->shape().size() != 2 || m->shape()[1] != h * w) {
      throw ShapeError("nmrp: support map must be {M_cat," + std::to_string(h * w) +
                       "}, got " + shape_str(m->shape()));
    }
  }
}

// Per-level response planes for one support family, globally min-max
// normalized across levels.
std::vector<Tensor> normalized_family(const std::vector<InstanceLevelInput>& levels,
                                      bool cons, std::size_t h, std::size_t w) {
  std::vector<Tensor> f;
  f.reserve(levels.size());
  for (const InstanceLevelInput& lv : levels) {
    const Tensor& m = cons ? lv.m_cons : lv.m_dis;
    const Tensor m_tilde = minmax_normalize(category_mean_map(m, h, w));
    f.push_back(mul(channel_mean_map(lv.x_ir), m_tilde));
  }
  double gmin = f[0][0];
  double gmax = f[0][0];
  for (const Tensor& t : f) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      gmin = std::min(gmin, t[i]);
      gmax = std::max(gmax, t[i]);
    }
  }
  const double denom = gmax - gmin + kNmrpEps;
  for (Tensor& t : f) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (t[i] - gmin) / denom;
  }
  return f;
}

double masked_mean(const Tensor& plane, const std::vector<std::uint8_t>& mask,
                   std::uint8_t keep) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (mask[i] == keep) {
      sum += plane[i];
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / double(count);
}

}  // namespace

Tensor category_mean_map(const Tensor& m, std::size_t h, std::size_t w) {
  if (m.shape().size() != 2 || m.shape()[1] != h * w) {
    throw ShapeError("category_mean_map: expected {M_cat," + std::to_string(h * w) +
                     "}, got " + shape_str(m.shape()));
  }
  return reshape(colwise_mean(m), {h, w});
}

Tensor channel_mean_map(const Tensor& x) {
  if (x.shape().size() != 3) {
    throw ShapeError("channel_mean_map: expected rank 3 {C,h,w}, got " +
                     shape_str(x.shape()));
  }
  const std::size_t c = x.shape()[0];
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  Tensor out = Tensor::zeros({x.shape()[1], x.shape()[2]});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < hw; ++i) out[i] += x[ch * hw + i];
  }
  for (std::size_t i = 0; i < hw; ++i) out[i] /= double(c);
  return out;
}

Tensor minmax_normalize(const Tensor& t, double eps) {
  if (t.size() == 0) throw ParamError("minmax_normalize: empty tensor");
  if (eps <= 0.0) throw ParamError("minmax_normalize: eps must be positive");
  double lo = t[0];
  double hi = t[0];
  for (std::size_t i = 0; i < t.size(); ++i) {
    lo = std::min(lo, t[i]);
    hi = std::max(hi, t[i]);
  }
  Tensor out = Tensor::zeros(t.shape());
  const double denom = hi - lo + eps;
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = (t[i] - lo) / denom;
  return out;
}

std::vector<std::uint8_t> union_box_mask(const std::vector<BoxAnnotation>& boxes,
                                         std::size_t h, std::size_t w,
                                         std::size_t stride) {
  if (h == 0 || w == 0) throw ParamError("union_box_mask: empty grid");
  if (stride == 0) throw ParamError("union_box_mask: stride must be positive");
  std::vector<std::uint8_t> mask(h * w, 0);
  for (const BoxAnnotation& b : boxes) {
    if (b.x2 <= b.x1 || b.y2 <= b.y1) {
      throw ParamError("union_box_mask: degenerate box [" + std::to_string(b.x1) +
                       "," + std::to_string(b.y1) + "," + std::to_string(b.x2) + "," +
                       std::to_string(b.y2) + "]");
    }
    const double s = double(stride);
    long c1 = (long)std::floor(double(b.x1) / s);
    long c2 = (long)std::ceil(double(b.x2) / s) - 1;
    long r1 = (long)std::floor(double(b.y1) / s);
    long r2 = (long)std::ceil(double(b.y2) / s) - 1;
    c1 = std::max(c1, 0L);
    r1 = std::max(r1, 0L);
    c2 = std::min(c2, (long)w - 1);
    r2 = std::min(r2, (long)h - 1);
    if (c2 < c1 || r2 < r1) {
      throw ParamError("union_box_mask: box [" + std::to_string(b.x1) + "," +
                       std::to_string(b.y1) + "," + std::to_string(b.x2) + "," +
                       std::to_string(b.y2) + "] projects to zero feature cells");
    }
    for (long r = r1; r <= r2; ++r) {
      for (long c = c1; c <= c2; ++c) {
        mask[std::size_t(r) * w + std::size_t(c)] = 1;
      }
    }
  }
  return mask;
}

InstanceResponse instance_response(const std::vector<InstanceLevelInput>& levels,
                                   const std::vector<BoxAnnotation>& boxes,
                                   std::size_t stride) {
  if (levels.empty()) throw ParamError("instance_response: at least one level required");
  if (boxes.empty()) throw ParamError("instance_response: at least one box required");
  const std::size_t h = levels[0].x_ir.shape().size() == 3 ? levels[0].x_ir.shape()[1] : 0;
  const std::size_t w = levels[0].x_ir.shape().size() == 3 ? levels[0].x_ir.shape()[2] : 0;
  for (const InstanceLevelInput& lv : levels) check_level_input(lv, h, w);
  const std::vector<std::uint8_t> mask = union_box_mask(boxes, h, w, stride);

  InstanceResponse out;
  for (bool cons : {true, false}) {
    const std::vector<Tensor> family = normalized_family(levels, cons, h, w);
    std::vector<double>& dst = cons ? out.cons : out.dis;
    for (const Tensor& plane : family) dst.push_back(masked_mean(plane, mask, 1));
  }
  return out;
}

NmrpReport population_nmrp(const std::vector<NmrpImageInput>& dataset,
                           const std::vector<int>& level_labels,
                           std::size_t stride) {
  if (dataset.empty()) throw ParamError("population_nmrp: empty dataset");
  const std::size_t n_levels = level_labels.size();
  if (n_levels == 0) throw ParamError("population_nmrp: empty level set");
  for (const NmrpImageInput& img : dataset) {
    if (img.levels.size() != n_levels) {
      throw ParamError("population_nmrp: image has " +
                       std::to_string(img.levels.size()) + " levels, expected " +
                       std::to_string(n_levels));
    }
  }

  // [level][support 0=cons,1=dis][region 0=GT,1=BG]
  std::vector<std::array<std::array<double, 2>, 2>> sums(
      n_levels, {{{0.0, 0.0}, {0.0, 0.0}}});
  std::vector<std::array<std::array<std::size_t, 2>, 2>> counts(
      n_levels, {{{0, 0}, {0, 0}}});

  NmrpReport report;
  report.images = dataset.size();
  report.stride = stride;

  for (const NmrpImageInput& img : dataset) {
    const std::size_t h =
        img.levels[0].x_ir.shape().size() == 3 ? img.levels[0].x_ir.shape()[1] : 0;
    const std::size_t w =
        img.levels[0].x_ir.shape().size() == 3 ? img.levels[0].x_ir.shape()[2] : 0;
    for (const InstanceLevelInput& lv : img.levels) check_level_input(lv, h, w);
    std::vector<std::uint8_t> mask(h * w, 0);
    const bool has_boxes = !img.boxes.empty();
    if (has_boxes) {
      mask = union_box_mask(img.boxes, h, w, stride);
    } else {
      ++report.images_without_boxes;
    }
    const bool has_bg =
        std::any_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v == 0; });

    for (int s = 0; s < 2; ++s) {
      const std::vector<Tensor> family =
          normalized_family(img.levels, s == 0, h, w);
      for (std::size_t l = 0; l < n_levels; ++l) {
        if (has_boxes) {
          sums[l][std::size_t(s)][0] += masked_mean(family[l], mask, 1);
          ++counts[l][std::size_t(s)][0];
        }
        if (has_bg) {
          sums[l][std::size_t(s)][1] += masked_mean(family[l], mask, 0);
          ++counts[l][std::size_t(s)][1];
        }
      }
    }
  }

  for (std::size_t l = 0; l < n_levels; ++l) {
    for (int s = 0; s < 2; ++s) {
      for (int g = 0; g < 2; ++g) {
        NmrpRow row;
        row.level = level_labels[l];
        row.support = s == 0 ? "cons" : "dis";
        row.region = g == 0 ? "GT" : "BG";
        const std::size_t n = counts[l][std::size_t(s)][std::size_t(g)];
        row.images = n;
        row.nmrp = n == 0 ? 0.0 : sums[l][std::size_t(s)][std::size_t(g)] / double(n);
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

std::string nmrp_csv(const NmrpReport& report) {
  std::string out = "level,support,region,nmrp\n";
  char buf[64];
  for (const NmrpRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.nmrp);
    out += std::to_string(row.level) + "," + row.support + "," + row.region + "," +
           buf + "\n";
  }
  return out;
}

}  // namespace fuselab
