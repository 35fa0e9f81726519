#include "fuselab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fuselab/opcount.hpp"

namespace fuselab {

namespace detail {
OpCounter*& active_counter() {
  thread_local OpCounter* current = nullptr;
  return current;
}
}  // namespace detail

namespace {

constexpr double kPi = 3.14159265358979323846;

void check(bool ok, const char* op, const std::string& detail) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": " + detail);
  }
}

std::string two(const Shape& a, const Shape& b) {
  return shape_str(a) + " vs " + shape_str(b);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.shape() == b.shape(), op, "shape mismatch " + two(a.shape(), b.shape()));
}

void check_rank(const Tensor& a, std::size_t r, const char* op) {
  check(a.rank() == r, op,
        "expected rank " + std::to_string(r) + ", got " + shape_str(a.shape()));
}

void check_scalar_arg(const Tensor& s, const char* op) {
  check(s.rank() == 1 && s.size() == 1, op,
        "scalar argument must have shape (1), got " + shape_str(s.shape()));
}

void check_odd_kernel(std::size_t kh, std::size_t kw, const char* op) {
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ParamError(std::string(op) + ": kernel size must be odd, got " +
                     std::to_string(kh) + "x" + std::to_string(kw));
  }
}

Tensor map(const Tensor& a, double (*f)(double)) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// Orthonormal DCT-II basis: row k holds s_k * cos(pi * (2t+1) * k / (2n)).
std::vector<double> dct_basis(std::size_t n) {
  std::vector<double> c(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t t = 0; t < n; ++t) {
      c[k * n + t] =
          s * std::cos(kPi * (2.0 * static_cast<double>(t) + 1.0) *
                       static_cast<double>(k) / (2.0 * static_cast<double>(n)));
    }
  }
  return c;
}

Tensor dct2_plane(const Tensor& a, bool inverse) {
  const std::size_t h = a.shape()[0];
  const std::size_t w = a.shape()[1];
  const std::vector<double> ch = dct_basis(h);
  const std::vector<double> cw = dct_basis(w);
  std::vector<double> tmp(h * w, 0.0);
  Tensor out(Shape{h, w});
  if (!inverse) {
    // Y = C_h A C_w^T
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t x = 0; x < h; ++x) {
        const double c = ch[k * h + x];
        if (c == 0.0) continue;
        for (std::size_t y = 0; y < w; ++y) tmp[k * w + y] += c * a[x * w + y];
      }
    }
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t l = 0; l < w; ++l) {
        double acc = 0.0;
        for (std::size_t y = 0; y < w; ++y) acc += tmp[k * w + y] * cw[l * w + y];
        out[k * w + l] = acc;
      }
    }
  } else {
    // A = C_h^T Y C_w
    for (std::size_t x = 0; x < h; ++x) {
      for (std::size_t k = 0; k < h; ++k) {
        const double c = ch[k * h + x];
        if (c == 0.0) continue;
        for (std::size_t l = 0; l < w; ++l) tmp[x * w + l] += c * a[k * w + l];
      }
    }
    for (std::size_t x = 0; x < h; ++x) {
      for (std::size_t y = 0; y < w; ++y) {
        double acc = 0.0;
        for (std::size_t l = 0; l < w; ++l) acc += tmp[x * w + l] * cw[l * w + y];
        out[x * w + y] = acc;
      }
    }
  }
  return out;
}

Tensor per_channel(const Tensor& x, bool inverse) {
  const std::size_t c = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  Tensor out(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    Tensor plane(Shape{h, w});
    std::copy(x.data() + ch * h * w, x.data() + (ch + 1) * h * w, plane.data());
    Tensor t = dct2_plane(plane, inverse);
    std::copy(t.data(), t.data() + h * w, out.data() + ch * h * w);
  }
  return out;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

std::size_t shape_numel(const Shape& s) {
  if (s.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor ctor: data size " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

double& Tensor::at2(std::size_t i, std::size_t j) {
  check_rank(*this, 2, "at2");
  return data_[i * shape_[1] + j];
}

double Tensor::at2(std::size_t i, std::size_t j) const {
  check_rank(*this, 2, "at2");
  return data_[i * shape_[1] + j];
}

double& Tensor::at3(std::size_t c, std::size_t i, std::size_t j) {
  check_rank(*this, 3, "at3");
  return data_[(c * shape_[1] + i) * shape_[2] + j];
}

double Tensor::at3(std::size_t c, std::size_t i, std::size_t j) const {
  check_rank(*this, 3, "at3");
  return data_[(c * shape_[1] + i) * shape_[2] + j];
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

Tensor add_scalar(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s;
  return out;
}

Tensor one_minus(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 1.0 - a[i];
  return out;
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  check_scalar_arg(s, "scale_by");
  return scale(a, s[0]);
}

Tensor div_by(const Tensor& a, const Tensor& s) {
  check_scalar_arg(s, "div_by");
  if (s[0] == 0.0) throw NumericError("div_by: division by zero scalar");
  return scale(a, 1.0 / s[0]);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  check(a.shape()[1] == b.shape()[0], "matmul",
        "inner dimensions differ, " + two(a.shape(), b.shape()));
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  if (OpCounter* c = detail::active_counter()) c->add_matmul(m, k, n);
  return out;
}

Tensor transpose(const Tensor& a) {
  check_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  check(shape_numel(shape) == a.size(), "reshape",
        "element count mismatch, " + shape_str(a.shape()) + " to " + shape_str(shape));
  return Tensor(std::move(shape), a.vec());
}

Tensor sigmoid(const Tensor& a) {
  return map(a, +[](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor relu(const Tensor& a) {
  return map(a, +[](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor gelu(const Tensor& a) {
  return map(a, +[](double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
  });
}

Tensor softmax_rows(const Tensor& a) {
  check_rank(a, 2, "softmax_rows");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  Tensor out(a.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::exp(row[j] - mx);
      out[i * n + j] = e;
      denom += e;
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  check_rank(a, 2, "log_softmax_rows");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  Tensor out(a.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a.data() + i * n;
    std::size_t jm = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (row[j] > row[jm]) jm = j;
    const double mx = row[jm];
    // exp(0) for the max entry is exactly 1, so fold it through log1p and
    // keep log-probabilities near 0 at full precision.
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != jm) rest += std::exp(row[j] - mx);
    const double lse = std::log1p(rest);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - mx - lse;
  }
  return out;
}

Tensor colwise_max(const Tensor& a) {
  check_rank(a, 2, "colwise_max");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  check(m > 0, "colwise_max", "empty row axis");
  Tensor out(Shape{n});
  for (std::size_t j = 0; j < n; ++j) {
    double mx = a[j];
    for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, a[i * n + j]);
    out[j] = mx;
  }
  return out;
}

std::vector<std::size_t> colwise_argmax(const Tensor& a) {
  check_rank(a, 2, "colwise_argmax");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  check(m > 0, "colwise_argmax", "empty row axis");
  std::vector<std::size_t> out(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 1; i < m; ++i)
      if (a[i * n + j] > a[out[j] * n + j]) out[j] = i;
  }
  return out;
}

Tensor colwise_mean(const Tensor& a) {
  check_rank(a, 2, "colwise_mean");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  check(m > 0, "colwise_mean", "empty row axis");
  Tensor out(Shape{n});
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
    out[j] = acc / static_cast<double>(m);
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  check_rank(x, 3, "global_avg_pool");
  const std::size_t c = x.shape()[0];
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  check(hw > 0, "global_avg_pool", "empty spatial plane");
  Tensor out(Shape{c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += x[ch * hw + i];
    out[ch] = acc / static_cast<double>(hw);
  }
  return out;
}

Tensor mul_spatial(const Tensor& x, const Tensor& m) {
  check_rank(x, 3, "mul_spatial");
  check_rank(m, 2, "mul_spatial");
  check(x.shape()[1] == m.shape()[0] && x.shape()[2] == m.shape()[1],
        "mul_spatial", "plane mismatch " + two(x.shape(), m.shape()));
  const std::size_t c = x.shape()[0];
  const std::size_t hw = m.size();
  Tensor out(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < hw; ++i) out[ch * hw + i] = x[ch * hw + i] * m[i];
  return out;
}

Tensor mul_channelwise(const Tensor& x, const Tensor& g) {
  check_rank(x, 3, "mul_channelwise");
  check_rank(g, 1, "mul_channelwise");
  check(x.shape()[0] == g.size(), "mul_channelwise",
        "channel mismatch " + two(x.shape(), g.shape()));
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  Tensor out(x.shape());
  for (std::size_t ch = 0; ch < g.size(); ++ch)
    for (std::size_t i = 0; i < hw; ++i) out[ch * hw + i] = x[ch * hw + i] * g[ch];
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "concat_rows");
  check_rank(b, 2, "concat_rows");
  check(a.shape()[1] == b.shape()[1], "concat_rows",
        "column mismatch " + two(a.shape(), b.shape()));
  Tensor out(Shape{a.shape()[0] + b.shape()[0], a.shape()[1]});
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  check_rank(a, 3, "concat_channels");
  check_rank(b, 3, "concat_channels");
  check(a.shape()[1] == b.shape()[1] && a.shape()[2] == b.shape()[2],
        "concat_channels", "plane mismatch " + two(a.shape(), b.shape()));
  Tensor out(Shape{a.shape()[0] + b.shape()[0], a.shape()[1], a.shape()[2]});
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  check_rank(a, 2, "slice_rows");
  check(r0 < r1 && r1 <= a.shape()[0], "slice_rows",
        "bad row range [" + std::to_string(r0) + ", " + std::to_string(r1) +
            ") for " + shape_str(a.shape()));
  const std::size_t n = a.shape()[1];
  Tensor out(Shape{r1 - r0, n});
  std::copy(a.data() + r0 * n, a.data() + r1 * n, out.data());
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  check_rank(x, 3, "add_channel_bias");
  check_rank(b, 1, "add_channel_bias");
  check(x.shape()[0] == b.size(), "add_channel_bias",
        "channel mismatch " + two(x.shape(), b.shape()));
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  Tensor out(x.shape());
  for (std::size_t ch = 0; ch < b.size(); ++ch)
    for (std::size_t i = 0; i < hw; ++i) out[ch * hw + i] = x[ch * hw + i] + b[ch];
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& k, std::size_t padding) {
  check_rank(x, 3, "conv2d");
  check_rank(k, 4, "conv2d");
  check(k.shape()[1] == x.shape()[0], "conv2d",
        "kernel expects " + std::to_string(k.shape()[1]) + " input channels, got " +
            std::to_string(x.shape()[0]));
  const std::size_t cin = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  const std::size_t cout = k.shape()[0];
  const std::size_t kh = k.shape()[2];
  const std::size_t kw = k.shape()[3];
  check_odd_kernel(kh, kw, "conv2d");
  check(h + 2 * padding >= kh && w + 2 * padding >= kw, "conv2d",
        "kernel " + shape_str(k.shape()) + " larger than padded input " +
            shape_str(x.shape()));
  const std::size_t oh = h + 2 * padding - kh + 1;
  const std::size_t ow = w + 2 * padding - kw + 1;
  Tensor out(Shape{cout, oh, ow});
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t oi = 0; oi < oh; ++oi) {
      for (std::size_t oj = 0; oj < ow; ++oj) {
        double acc = 0.0;
        for (std::size_t ic = 0; ic < cin; ++ic) {
          for (std::size_t di = 0; di < kh; ++di) {
            const std::ptrdiff_t xi =
                static_cast<std::ptrdiff_t>(oi + di) - static_cast<std::ptrdiff_t>(padding);
            if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t dj = 0; dj < kw; ++dj) {
              const std::ptrdiff_t xj =
                  static_cast<std::ptrdiff_t>(oj + dj) - static_cast<std::ptrdiff_t>(padding);
              if (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += x[(ic * h + xi) * w + xj] * k[((oc * cin + ic) * kh + di) * kw + dj];
            }
          }
        }
        out[(oc * oh + oi) * ow + oj] = acc;
      }
    }
  }
  return out;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& k, std::size_t padding) {
  check_rank(x, 3, "depthwise_conv2d");
  check_rank(k, 3, "depthwise_conv2d");
  check(k.shape()[0] == x.shape()[0], "depthwise_conv2d",
        "channel mismatch " + two(x.shape(), k.shape()));
  const std::size_t c = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  const std::size_t kh = k.shape()[1];
  const std::size_t kw = k.shape()[2];
  check_odd_kernel(kh, kw, "depthwise_conv2d");
  check(h + 2 * padding >= kh && w + 2 * padding >= kw, "depthwise_conv2d",
        "kernel " + shape_str(k.shape()) + " larger than padded input " +
            shape_str(x.shape()));
  const std::size_t oh = h + 2 * padding - kh + 1;
  const std::size_t ow = w + 2 * padding - kw + 1;
  Tensor out(Shape{c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oi = 0; oi < oh; ++oi) {
      for (std::size_t oj = 0; oj < ow; ++oj) {
        double acc = 0.0;
        for (std::size_t di = 0; di < kh; ++di) {
          const std::ptrdiff_t xi =
              static_cast<std::ptrdiff_t>(oi + di) - static_cast<std::ptrdiff_t>(padding);
          if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dj = 0; dj < kw; ++dj) {
            const std::ptrdiff_t xj =
                static_cast<std::ptrdiff_t>(oj + dj) - static_cast<std::ptrdiff_t>(padding);
            if (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w)) continue;
            acc += x[(ch * h + xi) * w + xj] * k[(ch * kh + di) * kw + dj];
          }
        }
        out[(ch * oh + oi) * ow + oj] = acc;
      }
    }
  }
  return out;
}

Tensor dct2_forward(const Tensor& a) {
  check_rank(a, 2, "dct2_forward");
  return dct2_plane(a, false);
}

Tensor dct2_inverse(const Tensor& a) {
  check_rank(a, 2, "dct2_inverse");
  return dct2_plane(a, true);
}

Tensor dct2_forward_channels(const Tensor& x) {
  check_rank(x, 3, "dct2_forward_channels");
  return per_channel(x, false);
}

Tensor dct2_inverse_channels(const Tensor& x) {
  check_rank(x, 3, "dct2_inverse_channels");
  return per_channel(x, true);
}

Tensor l2_normalize_rows(const Tensor& a) {
  check_rank(a, 2, "l2_normalize_rows");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  Tensor out(a.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += a[i * n + j] * a[i * n + j];
    const double norm = std::sqrt(ss);
    if (norm == 0.0) {
      throw NumericError("l2_normalize_rows: zero-norm row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] / norm;
  }
  return out;
}

Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  return Tensor::scalar(acc);
}

Tensor mean_all(const Tensor& a) {
  check(a.size() > 0, "mean_all", "empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  return Tensor::scalar(acc / static_cast<double>(a.size()));
}

Tensor diag_mean(const Tensor& a) {
  check_rank(a, 2, "diag_mean");
  check(a.shape()[0] == a.shape()[1], "diag_mean",
        "square tensor required, got " + shape_str(a.shape()));
  const std::size_t n = a.shape()[0];
  check(n > 0, "diag_mean", "empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i * n + i];
  return Tensor::scalar(acc / static_cast<double>(n));
}

Tensor pairs_mean(const Tensor& a, const IndexPairs& pairs) {
  check_rank(a, 2, "pairs_mean");
  if (pairs.empty()) throw ParamError("pairs_mean: empty pair set");
  const std::size_t m = a.shape()[0];
  const std::size_t n = a.shape()[1];
  double acc = 0.0;
  for (const auto& [i, j] : pairs) {
    if (i >= m || j >= n) {
      throw ParamError("pairs_mean: pair (" + std::to_string(i) + ", " +
                       std::to_string(j) + ") outside " + shape_str(a.shape()));
    }
    acc += a[i * n + j];
  }
  return Tensor::scalar(acc / static_cast<double>(pairs.size()));
}

Tensor conv2d_backward_input(const Tensor& gout, const Tensor& k, std::size_t padding) {
  check_rank(gout, 3, "conv2d_backward_input");
  check_rank(k, 4, "conv2d_backward_input");
  const std::size_t cout = k.shape()[0];
  const std::size_t cin = k.shape()[1];
  const std::size_t kh = k.shape()[2];
  const std::size_t kw = k.shape()[3];
  check(gout.shape()[0] == cout, "conv2d_backward_input",
        "channel mismatch " + two(gout.shape(), k.shape()));
  const std::size_t oh = gout.shape()[1];
  const std::size_t ow = gout.shape()[2];
  const std::size_t h = oh + kh - 1 - 2 * padding;
  const std::size_t w = ow + kw - 1 - 2 * padding;
  Tensor gx(Shape{cin, h, w});
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t oi = 0; oi < oh; ++oi) {
      for (std::size_t oj = 0; oj < ow; ++oj) {
        const double g = gout[(oc * oh + oi) * ow + oj];
        if (g == 0.0) continue;
        for (std::size_t ic = 0; ic < cin; ++ic) {
          for (std::size_t di = 0; di < kh; ++di) {
            const std::ptrdiff_t xi =
                static_cast<std::ptrdiff_t>(oi + di) - static_cast<std::ptrdiff_t>(padding);
            if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t dj = 0; dj < kw; ++dj) {
              const std::ptrdiff_t xj =
                  static_cast<std::ptrdiff_t>(oj + dj) - static_cast<std::ptrdiff_t>(padding);
              if (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w)) continue;
              gx[(ic * h + xi) * w + xj] += g * k[((oc * cin + ic) * kh + di) * kw + dj];
            }
          }
        }
      }
    }
  }
  return gx;
}

Tensor conv2d_backward_kernel(const Tensor& gout, const Tensor& x, std::size_t padding) {
  check_rank(gout, 3, "conv2d_backward_kernel");
  check_rank(x, 3, "conv2d_backward_kernel");
  const std::size_t cout = gout.shape()[0];
  const std::size_t oh = gout.shape()[1];
  const std::size_t ow = gout.shape()[2];
  const std::size_t cin = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  const std::size_t kh = h + 2 * padding - oh + 1;
  const std::size_t kw = w + 2 * padding - ow + 1;
  Tensor gk(Shape{cout, cin, kh, kw});
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t ic = 0; ic < cin; ++ic) {
      for (std::size_t di = 0; di < kh; ++di) {
        for (std::size_t dj = 0; dj < kw; ++dj) {
          double acc = 0.0;
          for (std::size_t oi = 0; oi < oh; ++oi) {
            const std::ptrdiff_t xi =
                static_cast<std::ptrdiff_t>(oi + di) - static_cast<std::ptrdiff_t>(padding);
            if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t oj = 0; oj < ow; ++oj) {
              const std::ptrdiff_t xj =
                  static_cast<std::ptrdiff_t>(oj + dj) - static_cast<std::ptrdiff_t>(padding);
              if (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += gout[(oc * oh + oi) * ow + oj] * x[(ic * h + xi) * w + xj];
            }
          }
          gk[((oc * cin + ic) * kh + di) * kw + dj] = acc;
        }
      }
    }
  }
  return gk;
}

Tensor depthwise_conv2d_backward_input(const Tensor& gout, const Tensor& k,
                                       std::size_t padding) {
  check_rank(gout, 3, "depthwise_conv2d_backward_input");
  check_rank(k, 3, "depthwise_conv2d_backward_input");
  const std::size_t c = k.shape()[0];
  const std::size_t kh = k.shape()[1];
  const std::size_t kw = k.shape()[2];
  check(gout.shape()[0] == c, "depthwise_conv2d_backward_input",
        "channel mismatch " + two(gout.shape(), k.shape()));
  const std::size_t oh = gout.shape()[1];
  const std::size_t ow = gout.shape()[2];
  const std::size_t h = oh + kh - 1 - 2 * padding;
  const std::size_t w = ow + kw - 1 - 2 * padding;
  Tensor gx(Shape{c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oi = 0; oi < oh; ++oi) {
      for (std::size_t oj = 0; oj < ow; ++oj) {
        const double g = gout[(ch * oh + oi) * ow + oj];
        if (g == 0.0) continue;
        for (std::size_t di = 0; di < kh; ++di) {
          const std::ptrdiff_t xi =
              static_cast<std::ptrdiff_t>(oi + di) - static_cast<std::ptrdiff_t>(padding);
          if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dj = 0; dj < kw; ++dj) {
            const std::ptrdiff_t xj =
                static_cast<std::ptrdiff_t>(oj + dj) - static_cast<std::ptrdiff_t>(padding);
            if (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w)) continue;
            gx[(ch * h + xi) * w + xj] += g * k[(ch * kh + di) * kw + dj];
          }
        }
      }
    }
  }
  return gx;
}

Tensor depthwise_conv2d_backward_kernel(const Tensor& gout, const Tensor& x,
                                        std::size_t padding) {
  check_rank(gout, 3, "depthwise_conv2d_backward_kernel");
  check_rank(x, 3, "depthwise_conv2d_backward_kernel");
  check(gout.shape()[0] == x.shape()[0], "depthwise_conv2d_backward_kernel",
        "channel mismatch " + two(gout.shape(), x.shape()));
  const std::size_t c = x.shape()[0];
  const std::size_t h = x.shape()[1];
  const std::size_t w = x.shape()[2];
  const std::size_t oh = gout.shape()[1];
  const std::size_t ow = gout.shape()[2];
  const std::size_t kh = h + 2 * padding - oh + 1;
  const std::size_t kw = w + 2 * padding - ow + 1;
  Tensor gk(Shape{c, kh, kw});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t di = 0; di < kh; ++di) {
      for (std::size_t dj = 0; dj < kw; ++dj) {
        double acc = 0.0;
        for (std::size_t oi = 0; oi < oh; ++oi) {
          const std::ptrdiff_t xi =
              static_cast<std::ptrdiff_t>(oi + di) - static_cast<std::ptrdiff_t>(padding);
          if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t oj = 0; oj < ow; ++oj) {
            const std::ptrdiff_t xj =
                static_cast<std::ptrdiff_t>(oj + dj) - static_cast<std::ptrdiff_t>(padding);
            if (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w)) continue;
            acc += gout[(ch * oh + oi) * ow + oj] * x[(ch * h + xi) * w + xj];
          }
        }
        gk[(ch * kh + di) * kw + dj] = acc;
      }
    }
  }
  return gk;
}

}  // namespace fuselab
