#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fuselab/errors.hpp"

namespace fuselab {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense row-major tensor of doubles. Rank is the number of dimensions;
// rank 0 is not used, scalars travel as shape {1}. All ops validate shapes
// and throw ShapeError / ParamError with a message naming the op.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}
  Tensor(Shape shape, double fill)
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-checked element access.
  double& at2(std::size_t i, std::size_t j);
  double at2(std::size_t i, std::size_t j) const;
  double& at3(std::size_t c, std::size_t i, std::size_t j);
  double at3(std::size_t c, std::size_t i, std::size_t j) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline Shape shape_of(const Tensor& t) { return t.shape(); }

// Elementwise, same shape required.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Scalar arithmetic.
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor one_minus(const Tensor& a);

// Arithmetic against a shape-{1} tensor (a learnable scalar).
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor div_by(const Tensor& a, const Tensor& s);

// Rank-2 linear algebra. matmul reports 2*m*k*n FLOPs to the active
// OpCounter, if one is installed.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

// Elementwise nonlinearities.
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);

// Rowwise softmax over a rank-2 tensor, numerically stabilized by rowwise
// max subtraction. log_softmax_rows keeps tiny probabilities exact through
// a log1p formulation.
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);

// Reductions over the row axis of a rank-2 (m x n) tensor, giving shape {n}.
Tensor colwise_max(const Tensor& a);
Tensor colwise_mean(const Tensor& a);
std::vector<std::size_t> colwise_argmax(const Tensor& a);

// {C,H,W} -> {C} mean over the spatial plane.
Tensor global_avg_pool(const Tensor& x);

// Broadcast multiplies: {C,H,W} times {H,W}, and {C,H,W} times {C}.
Tensor mul_spatial(const Tensor& x, const Tensor& m);
Tensor mul_channelwise(const Tensor& x, const Tensor& g);

// Concatenation and slicing.
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);

// {C,H,W} plus a per-channel bias {C}.
Tensor add_channel_bias(const Tensor& x, const Tensor& b);

// Convolutions, stride 1, zero padding, odd kernel sizes only. x is
// {C_in,H,W}; conv2d kernels are {C_out,C_in,kh,kw}; depthwise kernels are
// {C,kh,kw}.
Tensor conv2d(const Tensor& x, const Tensor& k, std::size_t padding);
Tensor depthwise_conv2d(const Tensor& x, const Tensor& k, std::size_t padding);

// Orthonormal 2-D DCT-II and its exact inverse, on rank-2 planes or per
// channel on {C,H,W}. Direct loops, not matmul, so DCT work never lands in
// the FLOP counter.
Tensor dct2_forward(const Tensor& a);
Tensor dct2_inverse(const Tensor& a);
Tensor dct2_forward_channels(const Tensor& x);
Tensor dct2_inverse_channels(const Tensor& x);

// Rowwise L2 normalization of a rank-2 tensor. A zero-norm row raises
// NumericError naming the row.
Tensor l2_normalize_rows(const Tensor& a);

// Scalar reductions, shape {1} results.
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
// Mean of the main diagonal of a square rank-2 tensor.
Tensor diag_mean(const Tensor& a);
// Mean of a[i][j] over an index pair list into a rank-2 tensor. Empty list
// or out-of-range pair raises ParamError.
using IndexPairs = std::vector<std::pair<std::size_t, std::size_t>>;
Tensor pairs_mean(const Tensor& a, const IndexPairs& pairs);

// Backward kernels used by the autodiff tape.
Tensor conv2d_backward_input(const Tensor& gout, const Tensor& k, std::size_t padding);
Tensor conv2d_backward_kernel(const Tensor& gout, const Tensor& x, std::size_t padding);
Tensor depthwise_conv2d_backward_input(const Tensor& gout, const Tensor& k, std::size_t padding);
Tensor depthwise_conv2d_backward_kernel(const Tensor& gout, const Tensor& x, std::size_t padding);

}  // namespace fuselab
