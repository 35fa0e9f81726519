#include "fuselab/complexity.hpp"

#include <cmath>
#include <string>

#include "fuselab/errors.hpp"
#include "fuselab/opcount.hpp"

namespace fuselab {
namespace {

constexpr std::uint64_t kMax = (std::uint64_t{1} << 63) - 1;

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* who) {
  if (a != 0 && b > kMax / a) {
    throw NumericError(std::string(who) + ": FLOP count overflows past 2^63-1");
  }
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* who) {
  if (b > kMax - a) {
    throw NumericError(std::string(who) + ": FLOP count overflows past 2^63-1");
  }
  return a + b;
}

Tensor flatten_rows(const Tensor& x) {
  const std::size_t c = x.shape()[0];
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  return transpose(reshape(x, {c, hw}));
}

}  // namespace

std::uint64_t flops_direct(std::uint64_t n, std::uint64_t c) {
  if (n == 0 || c == 0) throw ParamError("flops_direct: n and c must be positive");
  const std::uint64_t affinity =
      checked_mul(2, checked_mul(checked_mul(n, n, "flops_direct"), c, "flops_direct"),
                  "flops_direct");
  return checked_add(affinity, affinity, "flops_direct");
}

std::uint64_t flops_bridge(std::uint64_t n, std::uint64_t m_cat, std::uint64_t c) {
  if (n == 0 || m_cat == 0 || c == 0) {
    throw ParamError("flops_bridge: n, m_cat and c must be positive");
  }
  const std::uint64_t affinity =
      checked_mul(2, checked_mul(checked_mul(n, m_cat, "flops_bridge"), c, "flops_bridge"),
                  "flops_bridge");
  return checked_add(affinity, affinity, "flops_bridge");
}

double flops_ratio(std::uint64_t n, std::uint64_t m_cat) {
  if (n == 0 || m_cat == 0) throw ParamError("flops_ratio: n and m_cat must be positive");
  return double(m_cat) / double(n);
}

MeasuredFlops measured_bridge_vs_direct(const Tensor& x_rgb, const Tensor& x_ir,
                                        const Tensor& t) {
  OpCounter* counter = detail::active_counter();
  if (counter == nullptr) {
    throw ContractError("measured_bridge_vs_direct: no FLOP counter installed");
  }
  if (x_rgb.shape().size() != 3 || x_ir.shape().size() != 3) {
    throw ShapeError("measured_bridge_vs_direct: features must have rank 3 {C,H,W}");
  }
  if (x_rgb.shape() != x_ir.shape()) {
    throw ShapeError("measured_bridge_vs_direct: feature shapes differ, " +
                     shape_str(x_rgb.shape()) + " vs " + shape_str(x_ir.shape()));
  }
  if (t.shape().size() != 2 || t.shape()[1] != x_ir.shape()[0]) {
    throw ShapeError(
        "measured_bridge_vs_direct: t must be {M," +
        std::to_string(x_ir.shape()[0]) + "}, got " + shape_str(t.shape()));
  }
  const double inv_sqrt_c = 1.0 / std::sqrt(double(x_ir.shape()[0]));
  const Tensor ir_rows = flatten_rows(x_ir);
  const Tensor rgb_rows = flatten_rows(x_rgb);

  MeasuredFlops out;
  const std::uint64_t t0 = counter->total();
  const Tensor a_dir =
      sigmoid(scale(matmul(ir_rows, transpose(rgb_rows)), inv_sqrt_c));
  const Tensor aggregated = matmul(a_dir, rgb_rows);
  (void)aggregated;
  const std::uint64_t t1 = counter->total();
  const Tensor a_ir_t =
      sigmoid(scale(matmul(ir_rows, transpose(t)), inv_sqrt_c));
  const Tensor a_t_rgb =
      sigmoid(scale(matmul(t, transpose(rgb_rows)), inv_sqrt_c));
  (void)a_ir_t;
  (void)a_t_rgb;
  const std::uint64_t t2 = counter->total();
  out.direct = t1 - t0;
  out.bridge = t2 - t1;
  return out;
}

}  // namespace fuselab
