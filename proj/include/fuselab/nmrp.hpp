#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "fuselab/image.hpp"
#include "fuselab/tensor.hpp"

namespace fuselab {

// Support-response statistics under progressive degradation: per-level
// min-max normalized support maps weight a channel-reduced X_ir, the
// resulting feature families are globally normalized across levels, and
// responses are averaged over box regions projected at stride 8.

inline constexpr double kNmrpEps = 1e-6;
inline constexpr std::size_t kNmrpStride = 8;

// {M_cat, h*w} support map -> {h, w} by category mean.
Tensor category_mean_map(const Tensor& m, std::size_t h, std::size_t w);

// {C, h, w} -> {h, w} by channel mean.
Tensor channel_mean_map(const Tensor& x);

// (t - min) / (max - min + eps), elementwise over the whole tensor.
Tensor minmax_normalize(const Tensor& t, double eps = kNmrpEps);

// Feature-space cells floor(x/s)..ceil(x/s)-1 per box, clamped to the grid;
// a box projecting to zero cells is a parameter error. Returns an h*w 0/1 mask.
std::vector<std::uint8_t> union_box_mask(const std::vector<BoxAnnotation>& boxes,
                                         std::size_t h, std::size_t w,
                                         std::size_t stride = kNmrpStride);

struct InstanceLevelInput {
  Tensor m_cons;  // {M_cat, h*w}
  Tensor m_dis;   // {M_cat, h*w}
  Tensor x_ir;    // {C, h, w}
};

struct InstanceResponse {
  std::vector<double> cons;  // per level, averaged over the union box region
  std::vector<double> dis;
};

InstanceResponse instance_response(const std::vector<InstanceLevelInput>& levels,
                                   const std::vector<BoxAnnotation>& boxes,
                                   std::size_t stride = kNmrpStride);

struct NmrpImageInput {
  std::vector<InstanceLevelInput> levels;
  std::vector<BoxAnnotation> boxes;  // may be empty: BG-only contribution
};

struct NmrpRow {
  int level = 0;
  std::string support;  // "cons" | "dis"
  std::string region;   // "GT" | "BG"
  double nmrp = 0.0;
  std::size_t images = 0;  // contributing image count
};

struct NmrpReport {
  std::vector<NmrpRow> rows;
  std::size_t images = 0;
  std::size_t images_without_boxes = 0;
  std::size_t stride = kNmrpStride;
};

NmrpReport population_nmrp(const std::vector<NmrpImageInput>& dataset,
                           const std::vector<int>& level_labels,
                           std::size_t stride = kNmrpStride);

// CSV with header level,support,region,nmrp; %.17g values.
std::string nmrp_csv(const NmrpReport& report);

}  // namespace fuselab
