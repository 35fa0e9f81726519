#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "fuselab/tensor.hpp"

namespace fuselab::ad {

class Tape;
class GradAccum;

// Handle to one recorded value on a tape. Cheap to copy; the tape owns the
// data. Every op below records a node and returns the handle, so pipeline
// code written against these free functions reads the same as the plain
// Tensor version and can be shared via templates.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

// Gradient accumulator keyed by node id. Created by Tape::backward.
class GradAccum {
 public:
  explicit GradAccum(std::size_t n) : grads_(n) {}
  void add(int id, const Tensor& g);
  bool has(int id) const { return !grads_[static_cast<std::size_t>(id)].empty(); }
  const Tensor& get(int id) const { return grads_[static_cast<std::size_t>(id)]; }

 private:
  std::vector<Tensor> grads_;
};

// Eagerly evaluated reverse-mode tape. Nodes are appended in evaluation
// order, so parents always precede children and one reverse sweep suffices.
class Tape {
 public:
  using Backward =
      std::function<void(const Tape&, int self, const Tensor& gout, GradAccum&)>;

  // Records a leaf. Leaves are the differentiation targets: backward()
  // reports a gradient for every leaf, zero if the loss never touches it.
  Var input(Tensor value);

  // Records an interior node. Used by the op layer.
  Var node(Tensor value, std::vector<int> parents, Backward backward);

  const Tensor& value(int id) const;
  const Tensor& value(Var v) const { return value(v.id); }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss. Returns leaf id -> gradient.
  std::map<int, Tensor> backward(Var loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<int> parents;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

inline Shape shape_of(Var v) { return v.tape->value(v).shape(); }

// Op layer mirroring the Tensor vocabulary. Forward values are computed
// immediately with the Tensor ops; each node stores the matching backward
// rule.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var one_minus(Var a);
Var scale_by(Var a, Var s);
Var div_by(Var a, Var s);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, Shape shape);
Var sigmoid(Var a);
Var relu(Var a);
Var gelu(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var colwise_max(Var a);
Var colwise_mean(Var a);
Var global_avg_pool(Var x);
Var mul_spatial(Var x, Var m);
Var mul_channelwise(Var x, Var g);
Var concat_rows(Var a, Var b);
Var concat_channels(Var a, Var b);
Var slice_rows(Var a, std::size_t r0, std::size_t r1);
Var add_channel_bias(Var x, Var b);
Var conv2d(Var x, Var k, std::size_t padding);
Var depthwise_conv2d(Var x, Var k, std::size_t padding);
Var dct2_forward(Var a);
Var dct2_inverse(Var a);
Var dct2_forward_channels(Var x);
Var dct2_inverse_channels(Var x);
Var l2_normalize_rows(Var a);
Var sum_all(Var a);
Var mean_all(Var a);
Var diag_mean(Var a);
Var pairs_mean(Var a, const IndexPairs& pairs);

}  // namespace fuselab::ad
