#include "fuselab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fuselab/errors.hpp"

namespace fuselab::ad {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

Tape* tape_of(Var a, const char* op) {
  if (a.tape == nullptr || a.id < 0) {
    throw ContractError(std::string(op) + ": unbound var");
  }
  return a.tape;
}

Tape* same_tape(Var a, Var b, const char* op) {
  Tape* t = tape_of(a, op);
  if (tape_of(b, op) != t) {
    throw ContractError(std::string(op) + ": operands recorded on different tapes");
  }
  return t;
}

}  // namespace

void GradAccum::add(int id, const Tensor& g) {
  Tensor& slot = grads_[static_cast<std::size_t>(id)];
  if (slot.empty()) {
    slot = g;
    return;
  }
  if (slot.shape() != g.shape()) {
    throw ContractError("gradient shape mismatch for node " + std::to_string(id) +
                        ": " + shape_str(slot.shape()) + " vs " + shape_str(g.shape()));
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[i];
}

Var Tape::input(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::node(Tensor value, std::vector<int> parents, Backward backward) {
  for (int p : parents) {
    if (p < 0 || static_cast<std::size_t>(p) >= nodes_.size()) {
      throw ContractError("node parent " + std::to_string(p) + " not on tape");
    }
  }
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(backward)});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ContractError("value: node " + std::to_string(id) + " not on tape");
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

std::map<int, Tensor> Tape::backward(Var loss) const {
  if (loss.tape != this) throw ContractError("backward: loss recorded on another tape");
  const Tensor& lv = value(loss.id);
  if (lv.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_str(lv.shape()));
  }
  GradAccum acc(nodes_.size());
  acc.add(loss.id, Tensor(lv.shape(), 1.0));
  for (int id = loss.id; id >= 0; --id) {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (!nd.backward || !acc.has(id)) continue;
    nd.backward(*this, id, acc.get(id), acc);
  }
  std::map<int, Tensor> out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& nd = nodes_[id];
    if (nd.backward || !nd.parents.empty()) continue;
    const int i = static_cast<int>(id);
    out[i] = acc.has(i) ? acc.get(i) : Tensor(nd.value.shape());
  }
  return out;
}

Var add(Var a, Var b) {
  Tape* t = same_tape(a, b, "add");
  return t->node(fuselab::add(t->value(a), t->value(b)), {a.id, b.id},
                 [ida = a.id, idb = b.id](const Tape&, int, const Tensor& g,
                                          GradAccum& acc) {
                   acc.add(ida, g);
                   acc.add(idb, g);
                 });
}

Var sub(Var a, Var b) {
  Tape* t = same_tape(a, b, "sub");
  return t->node(fuselab::sub(t->value(a), t->value(b)), {a.id, b.id},
                 [ida = a.id, idb = b.id](const Tape&, int, const Tensor& g,
                                          GradAccum& acc) {
                   acc.add(ida, g);
                   acc.add(idb, fuselab::scale(g, -1.0));
                 });
}

Var mul(Var a, Var b) {
  Tape* t = same_tape(a, b, "mul");
  return t->node(fuselab::mul(t->value(a), t->value(b)), {a.id, b.id},
                 [ida = a.id, idb = b.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   acc.add(ida, fuselab::mul(g, tp.value(idb)));
                   acc.add(idb, fuselab::mul(g, tp.value(ida)));
                 });
}

Var scale(Var a, double s) {
  Tape* t = tape_of(a, "scale");
  return t->node(fuselab::scale(t->value(a), s), {a.id},
                 [ida = a.id, s](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, fuselab::scale(g, s));
                 });
}

Var add_scalar(Var a, double s) {
  Tape* t = tape_of(a, "add_scalar");
  return t->node(fuselab::add_scalar(t->value(a), s), {a.id},
                 [ida = a.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, g);
                 });
}

Var one_minus(Var a) {
  Tape* t = tape_of(a, "one_minus");
  return t->node(fuselab::one_minus(t->value(a)), {a.id},
                 [ida = a.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, fuselab::scale(g, -1.0));
                 });
}

Var scale_by(Var a, Var s) {
  Tape* t = same_tape(a, s, "scale_by");
  return t->node(fuselab::scale_by(t->value(a), t->value(s)), {a.id, s.id},
                 [ida = a.id, ids = s.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   const double sv = tp.value(ids)[0];
                   acc.add(ida, fuselab::scale(g, sv));
                   acc.add(ids, fuselab::sum_all(fuselab::mul(g, tp.value(ida))));
                 });
}

Var div_by(Var a, Var s) {
  Tape* t = same_tape(a, s, "div_by");
  return t->node(fuselab::div_by(t->value(a), t->value(s)), {a.id, s.id},
                 [ida = a.id, ids = s.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   const double sv = tp.value(ids)[0];
                   acc.add(ida, fuselab::scale(g, 1.0 / sv));
                   const Tensor num = fuselab::sum_all(fuselab::mul(g, tp.value(ida)));
                   acc.add(ids, Tensor::scalar(-num[0] / (sv * sv)));
                 });
}

Var matmul(Var a, Var b) {
  Tape* t = same_tape(a, b, "matmul");
  return t->node(fuselab::matmul(t->value(a), t->value(b)), {a.id, b.id},
                 [ida = a.id, idb = b.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   acc.add(ida, fuselab::matmul(g, fuselab::transpose(tp.value(idb))));
                   acc.add(idb, fuselab::matmul(fuselab::transpose(tp.value(ida)), g));
                 });
}

Var transpose(Var a) {
  Tape* t = tape_of(a, "transpose");
  return t->node(fuselab::transpose(t->value(a)), {a.id},
                 [ida = a.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, fuselab::transpose(g));
                 });
}

Var reshape(Var a, Shape shape) {
  Tape* t = tape_of(a, "reshape");
  Shape prev = t->value(a).shape();
  return t->node(fuselab::reshape(t->value(a), std::move(shape)), {a.id},
                 [ida = a.id, prev](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, fuselab::reshape(g, prev));
                 });
}

Var sigmoid(Var a) {
  Tape* t = tape_of(a, "sigmoid");
  return t->node(fuselab::sigmoid(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int self, const Tensor& g,
                              GradAccum& acc) {
                   const Tensor& y = tp.value(self);
                   Tensor gx(y.shape());
                   for (std::size_t i = 0; i < y.size(); ++i)
                     gx[i] = g[i] * y[i] * (1.0 - y[i]);
                   acc.add(ida, gx);
                 });
}

Var relu(Var a) {
  Tape* t = tape_of(a, "relu");
  return t->node(fuselab::relu(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   Tensor gx(x.shape());
                   for (std::size_t i = 0; i < x.size(); ++i)
                     gx[i] = x[i] > 0.0 ? g[i] : 0.0;
                   acc.add(ida, gx);
                 });
}

Var gelu(Var a) {
  Tape* t = tape_of(a, "gelu");
  return t->node(fuselab::gelu(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   Tensor gx(x.shape());
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     const double cdf = 0.5 * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
                     const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x[i] * x[i]);
                     gx[i] = g[i] * (cdf + x[i] * pdf);
                   }
                   acc.add(ida, gx);
                 });
}

Var softmax_rows(Var a) {
  Tape* t = tape_of(a, "softmax_rows");
  return t->node(fuselab::softmax_rows(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int self, const Tensor& g,
                              GradAccum& acc) {
                   const Tensor& y = tp.value(self);
                   const std::size_t m = y.shape()[0];
                   const std::size_t n = y.shape()[1];
                   Tensor gx(y.shape());
                   for (std::size_t i = 0; i < m; ++i) {
                     double dot = 0.0;
                     for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
                     for (std::size_t j = 0; j < n; ++j)
                       gx[i * n + j] = y[i * n + j] * (g[i * n + j] - dot);
                   }
                   acc.add(ida, gx);
                 });
}

Var log_softmax_rows(Var a) {
  Tape* t = tape_of(a, "log_softmax_rows");
  return t->node(fuselab::log_softmax_rows(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int self, const Tensor& g,
                              GradAccum& acc) {
                   const Tensor& y = tp.value(self);
                   const std::size_t m = y.shape()[0];
                   const std::size_t n = y.shape()[1];
                   Tensor gx(y.shape());
                   for (std::size_t i = 0; i < m; ++i) {
                     double gsum = 0.0;
                     for (std::size_t j = 0; j < n; ++j) gsum += g[i * n + j];
                     for (std::size_t j = 0; j < n; ++j)
                       gx[i * n + j] = g[i * n + j] - std::exp(y[i * n + j]) * gsum;
                   }
                   acc.add(ida, gx);
                 });
}

Var colwise_max(Var a) {
  Tape* t = tape_of(a, "colwise_max");
  const Tensor& x = t->value(a);
  std::vector<std::size_t> arg = fuselab::colwise_argmax(x);
  return t->node(fuselab::colwise_max(x), {a.id},
                 [ida = a.id, arg](const Tape& tp, int, const Tensor& g,
                                   GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   const std::size_t n = x.shape()[1];
                   Tensor gx(x.shape());
                   for (std::size_t j = 0; j < n; ++j) gx[arg[j] * n + j] = g[j];
                   acc.add(ida, gx);
                 });
}

Var colwise_mean(Var a) {
  Tape* t = tape_of(a, "colwise_mean");
  return t->node(fuselab::colwise_mean(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   const std::size_t m = x.shape()[0];
                   const std::size_t n = x.shape()[1];
                   Tensor gx(x.shape());
                   for (std::size_t i = 0; i < m; ++i)
                     for (std::size_t j = 0; j < n; ++j)
                       gx[i * n + j] = g[j] / static_cast<double>(m);
                   acc.add(ida, gx);
                 });
}

Var global_avg_pool(Var x) {
  Tape* t = tape_of(x, "global_avg_pool");
  return t->node(fuselab::global_avg_pool(t->value(x)), {x.id},
                 [idx = x.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& v = tp.value(idx);
                   const std::size_t c = v.shape()[0];
                   const std::size_t hw = v.shape()[1] * v.shape()[2];
                   Tensor gx(v.shape());
                   for (std::size_t ch = 0; ch < c; ++ch)
                     for (std::size_t i = 0; i < hw; ++i)
                       gx[ch * hw + i] = g[ch] / static_cast<double>(hw);
                   acc.add(idx, gx);
                 });
}

Var mul_spatial(Var x, Var m) {
  Tape* t = same_tape(x, m, "mul_spatial");
  return t->node(fuselab::mul_spatial(t->value(x), t->value(m)), {x.id, m.id},
                 [idx = x.id, idm = m.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   const Tensor& xv = tp.value(idx);
                   const Tensor& mv = tp.value(idm);
                   acc.add(idx, fuselab::mul_spatial(g, mv));
                   const std::size_t c = xv.shape()[0];
                   const std::size_t hw = mv.size();
                   Tensor gm(mv.shape());
                   for (std::size_t ch = 0; ch < c; ++ch)
                     for (std::size_t i = 0; i < hw; ++i)
                       gm[i] += g[ch * hw + i] * xv[ch * hw + i];
                   acc.add(idm, gm);
                 });
}

Var mul_channelwise(Var x, Var g) {
  Tape* t = same_tape(x, g, "mul_channelwise");
  return t->node(fuselab::mul_channelwise(t->value(x), t->value(g)), {x.id, g.id},
                 [idx = x.id, idg = g.id](const Tape& tp, int, const Tensor& gout,
                                          GradAccum& acc) {
                   const Tensor& xv = tp.value(idx);
                   const Tensor& gv = tp.value(idg);
                   acc.add(idx, fuselab::mul_channelwise(gout, gv));
                   const std::size_t hw = xv.shape()[1] * xv.shape()[2];
                   Tensor gg(gv.shape());
                   for (std::size_t ch = 0; ch < gv.size(); ++ch)
                     for (std::size_t i = 0; i < hw; ++i)
                       gg[ch] += gout[ch * hw + i] * xv[ch * hw + i];
                   acc.add(idg, gg);
                 });
}

Var concat_rows(Var a, Var b) {
  Tape* t = same_tape(a, b, "concat_rows");
  return t->node(fuselab::concat_rows(t->value(a), t->value(b)), {a.id, b.id},
                 [ida = a.id, idb = b.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   const std::size_t ra = tp.value(ida).shape()[0];
                   const std::size_t rn = g.shape()[0];
                   acc.add(ida, fuselab::slice_rows(g, 0, ra));
                   acc.add(idb, fuselab::slice_rows(g, ra, rn));
                 });
}

Var concat_channels(Var a, Var b) {
  Tape* t = same_tape(a, b, "concat_channels");
  return t->node(fuselab::concat_channels(t->value(a), t->value(b)), {a.id, b.id},
                 [ida = a.id, idb = b.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   const Tensor& av = tp.value(ida);
                   const Tensor& bv = tp.value(idb);
                   Tensor ga(av.shape());
                   Tensor gb(bv.shape());
                   std::copy(g.data(), g.data() + av.size(), ga.data());
                   std::copy(g.data() + av.size(), g.data() + g.size(), gb.data());
                   acc.add(ida, ga);
                   acc.add(idb, gb);
                 });
}

Var slice_rows(Var a, std::size_t r0, std::size_t r1) {
  Tape* t = tape_of(a, "slice_rows");
  return t->node(fuselab::slice_rows(t->value(a), r0, r1), {a.id},
                 [ida = a.id, r0](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   const std::size_t n = x.shape()[1];
                   Tensor gx(x.shape());
                   std::copy(g.data(), g.data() + g.size(), gx.data() + r0 * n);
                   acc.add(ida, gx);
                 });
}

Var add_channel_bias(Var x, Var b) {
  Tape* t = same_tape(x, b, "add_channel_bias");
  return t->node(fuselab::add_channel_bias(t->value(x), t->value(b)), {x.id, b.id},
                 [idx = x.id, idb = b.id](const Tape& tp, int, const Tensor& g,
                                          GradAccum& acc) {
                   acc.add(idx, g);
                   const Tensor& bv = tp.value(idb);
                   const std::size_t hw = g.shape()[1] * g.shape()[2];
                   Tensor gb(bv.shape());
                   for (std::size_t ch = 0; ch < bv.size(); ++ch)
                     for (std::size_t i = 0; i < hw; ++i) gb[ch] += g[ch * hw + i];
                   acc.add(idb, gb);
                 });
}

Var conv2d(Var x, Var k, std::size_t padding) {
  Tape* t = same_tape(x, k, "conv2d");
  return t->node(fuselab::conv2d(t->value(x), t->value(k), padding), {x.id, k.id},
                 [idx = x.id, idk = k.id, padding](const Tape& tp, int,
                                                   const Tensor& g, GradAccum& acc) {
                   acc.add(idx, fuselab::conv2d_backward_input(g, tp.value(idk), padding));
                   acc.add(idk, fuselab::conv2d_backward_kernel(g, tp.value(idx), padding));
                 });
}

Var depthwise_conv2d(Var x, Var k, std::size_t padding) {
  Tape* t = same_tape(x, k, "depthwise_conv2d");
  return t->node(
      fuselab::depthwise_conv2d(t->value(x), t->value(k), padding), {x.id, k.id},
      [idx = x.id, idk = k.id, padding](const Tape& tp, int, const Tensor& g,
                                        GradAccum& acc) {
        acc.add(idx, fuselab::depthwise_conv2d_backward_input(g, tp.value(idk), padding));
        acc.add(idk, fuselab::depthwise_conv2d_backward_kernel(g, tp.value(idx), padding));
      });
}

Var dct2_forward(Var a) {
  Tape* t = tape_of(a, "dct2_forward");
  return t->node(fuselab::dct2_forward(t->value(a)), {a.id},
                 [ida = a.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, fuselab::dct2_inverse(g));
                 });
}

Var dct2_inverse(Var a) {
  Tape* t = tape_of(a, "dct2_inverse");
  return t->node(fuselab::dct2_inverse(t->value(a)), {a.id},
                 [ida = a.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, fuselab::dct2_forward(g));
                 });
}

Var dct2_forward_channels(Var x) {
  Tape* t = tape_of(x, "dct2_forward_channels");
  return t->node(fuselab::dct2_forward_channels(t->value(x)), {x.id},
                 [idx = x.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(idx, fuselab::dct2_inverse_channels(g));
                 });
}

Var dct2_inverse_channels(Var x) {
  Tape* t = tape_of(x, "dct2_inverse_channels");
  return t->node(fuselab::dct2_inverse_channels(t->value(x)), {x.id},
                 [idx = x.id](const Tape&, int, const Tensor& g, GradAccum& acc) {
                   acc.add(idx, fuselab::dct2_forward_channels(g));
                 });
}

Var l2_normalize_rows(Var a) {
  Tape* t = tape_of(a, "l2_normalize_rows");
  return t->node(fuselab::l2_normalize_rows(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int self, const Tensor& g,
                              GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   const Tensor& y = tp.value(self);
                   const std::size_t m = x.shape()[0];
                   const std::size_t n = x.shape()[1];
                   Tensor gx(x.shape());
                   for (std::size_t i = 0; i < m; ++i) {
                     double ss = 0.0;
                     double dot = 0.0;
                     for (std::size_t j = 0; j < n; ++j) {
                       ss += x[i * n + j] * x[i * n + j];
                       dot += g[i * n + j] * y[i * n + j];
                     }
                     const double norm = std::sqrt(ss);
                     for (std::size_t j = 0; j < n; ++j)
                       gx[i * n + j] = (g[i * n + j] - dot * y[i * n + j]) / norm;
                   }
                   acc.add(ida, gx);
                 });
}

Var sum_all(Var a) {
  Tape* t = tape_of(a, "sum_all");
  return t->node(fuselab::sum_all(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   acc.add(ida, Tensor(tp.value(ida).shape(), g[0]));
                 });
}

Var mean_all(Var a) {
  Tape* t = tape_of(a, "mean_all");
  return t->node(fuselab::mean_all(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   acc.add(ida, Tensor(x.shape(), g[0] / static_cast<double>(x.size())));
                 });
}

Var diag_mean(Var a) {
  Tape* t = tape_of(a, "diag_mean");
  return t->node(fuselab::diag_mean(t->value(a)), {a.id},
                 [ida = a.id](const Tape& tp, int, const Tensor& g, GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   const std::size_t n = x.shape()[0];
                   Tensor gx(x.shape());
                   for (std::size_t i = 0; i < n; ++i)
                     gx[i * n + i] = g[0] / static_cast<double>(n);
                   acc.add(ida, gx);
                 });
}

Var pairs_mean(Var a, const IndexPairs& pairs) {
  Tape* t = tape_of(a, "pairs_mean");
  return t->node(fuselab::pairs_mean(t->value(a), pairs), {a.id},
                 [ida = a.id, pairs](const Tape& tp, int, const Tensor& g,
                                     GradAccum& acc) {
                   const Tensor& x = tp.value(ida);
                   const std::size_t n = x.shape()[1];
                   Tensor gx(x.shape());
                   const double w = g[0] / static_cast<double>(pairs.size());
                   for (const auto& [i, j] : pairs) gx[i * n + j] += w;
                   acc.add(ida, gx);
                 });
}

}  // namespace fuselab::ad
