#include "fuselab/gradsuites.hpp"

#include "fuselab/alignment.hpp"
#include "fuselab/bridge_fusion.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/freq_backbone.hpp"
#include "fuselab/rng.hpp"

namespace fuselab {
namespace {

Tensor randn(Rng& rng, Shape shape, double sigma = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
  return t;
}

std::vector<GradCheckReport> bridge_suite(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t c_rgb = 3, c_ir = 2, d_t = 5, d_k = 4, m_cat = 2, h = 4, w = 4;
  const Tensor x_rgb = randn(rng, {c_rgb, h, w});
  const Tensor x_ir = randn(rng, {c_ir, h, w});
  const Tensor t = randn(rng, {m_cat, d_t});

  std::vector<NamedTensor> params;
  params.push_back({"alpha", Tensor::scalar(0.5)});
  params.push_back({"beta", Tensor::scalar(0.5)});
  params.push_back({"w_q", randn(rng, {d_t, d_k}, 0.5)});
  params.push_back({"w_k_rgb", randn(rng, {c_rgb, d_k}, 0.5)});
  params.push_back({"w_k_ir", randn(rng, {c_ir, d_k}, 0.5)});
  params.push_back({"psi", randn(rng, {c_rgb, c_ir, 1, 1}, 0.5)});
  params.push_back({"phi", randn(rng, {1, c_rgb, 1, 1}, 0.5)});
  params.push_back({"fuse_kernel", randn(rng, {c_rgb, 2 * c_rgb, 3, 3}, 0.25)});

  TapeFn fn = [=](ad::Tape& tape, const std::vector<ad::Var>& p) {
    ad::Var xr = tape.input(x_rgb);
    ad::Var xi = tape.input(x_ir);
    ad::Var tt = tape.input(t);
    auto out = fuse_forward_any(xr, xi, tt, p[2], p[3], p[4], p[0], p[1], p[5],
                                p[6], p[7], d_k, CategoryReduction::kMax);
    return mean_all(out.f_fuse);
  };
  return gradcheck(fn, params);
}

std::vector<GradCheckReport> alignment_suite(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d_t = 5, c = 4, d = 4, d_r = 4, d_embed = 6;
  const std::size_t n_r = 3, n_c = 2, h = 3, w = 3, scales = 2;
  const Tensor f = randn(rng, {c, h, w});
  const Tensor t = randn(rng, {n_c, d_t});
  const Tensor r = randn(rng, {n_r, d_r});
  const Tensor u = randn(rng, {scales, c});
  const IndexPairs pairs = {{0, 0}, {1, 1}, {2, 0}};

  std::vector<NamedTensor> params;
  params.push_back({"w_q_tv", randn(rng, {d_t, d}, 0.5)});
  params.push_back({"w_k_tv", randn(rng, {c, d}, 0.5)});
  params.push_back({"w_v_tv", randn(rng, {c, d}, 0.5)});
  params.push_back({"w_q_up", randn(rng, {d_t, d}, 0.5)});
  params.push_back({"w_k_up", randn(rng, {c, d}, 0.5)});
  params.push_back({"w_v_up", randn(rng, {c, d}, 0.5)});
  params.push_back({"w_o_up", randn(rng, {d, d_t}, 0.5)});
  params.push_back({"p_v", randn(rng, {d_r, d_embed}, 0.5)});
  params.push_back({"p_t", randn(rng, {d_t, d_embed}, 0.5)});
  params.push_back({"tau", Tensor::scalar(0.07)});

  TapeFn fn = [=](ad::Tape& tape, const std::vector<ad::Var>& p) {
    ad::Var fv = tape.input(f);
    ad::Var tv = tape.input(t);
    ad::Var rv = tape.input(r);
    ad::Var uv = tape.input(u);
    ad::Var t2 = update_text_any(tv, uv, p[3], p[4], p[5], p[6]);
    auto [attn, ctx] = text_to_vision_attend_any(t2, fv, p[0], p[1], p[2]);
    (void)attn;
    ad::Var s = region_text_similarity_any(rv, t2, p[7], p[8]);
    ad::Var loss = matching_loss_any(s, pairs, p[9]);
    return add(loss, scale(mean_all(ctx), 0.1));
  };
  return gradcheck(fn, params);
}

std::vector<GradCheckReport> freq_suite(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t c = 4, h = 6, w = 6;
  const Tensor x = randn(rng, {c, h, w});
  const FreqMask mask = init_freq_mask(h, w);

  std::vector<NamedTensor> params;
  params.push_back({"mask_logits", mask.logits});
  params.push_back({"phi_l_primary", randn(rng, {c / 2, c, 1, 1}, 0.5)});
  params.push_back({"phi_l_cheap", randn(rng, {c / 2, 3, 3}, 0.5)});
  params.push_back({"phi_h_primary", randn(rng, {c / 2, c, 1, 1}, 0.5)});
  params.push_back({"phi_h_cheap", randn(rng, {c / 2, 3, 3}, 0.5)});
  params.push_back({"se_w1", randn(rng, {c / 4, c}, 0.5)});
  params.push_back({"se_w2", randn(rng, {c, c / 4}, 0.5)});

  TapeFn fn = [=](ad::Tape& tape, const std::vector<ad::Var>& p) {
    ad::Var xv = tape.input(x);
    auto [xl, xh] = freq_decompose_any(xv, p[0]);
    ad::Var y = branch_recombine_any(xl, xh, p[1], p[2], p[3], p[4]);
    ad::Var z = se_recalibrate_any(y, p[5], p[6]);
    return mean_all(z);
  };
  return gradcheck(fn, params);
}

}  // namespace

std::vector<std::string> gradsuite_modules() {
  return {"bridge-fusion", "alignment-head", "freq-backbone"};
}

std::vector<GradCheckReport> run_gradsuite(const std::string& module,
                                           std::uint64_t seed) {
  if (module == "bridge-fusion") return bridge_suite(seed);
  if (module == "alignment-head") return alignment_suite(seed);
  if (module == "freq-backbone") return freq_suite(seed);
  throw ParamError("run_gradsuite: unknown module '" + module +
                   "', expected one of bridge-fusion, alignment-head, freq-backbone");
}

}  // namespace fuselab
