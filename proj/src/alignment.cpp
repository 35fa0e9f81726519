#include "fuselab/alignment.hpp"

#include "fuselab/errors.hpp"

namespace fuselab {

namespace {

Tensor gaussian_tensor(Shape shape, Rng& rng, double sigma) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
  return t;
}

void check_proj(const Tensor& w, std::size_t rows, std::size_t cols, const char* op,
                const char* name) {
  if (w.rank() != 2 || w.shape()[0] != rows || w.shape()[1] != cols) {
    throw ShapeError(std::string(op) + ": " + name + " must be (" +
                     std::to_string(rows) + ", " + std::to_string(cols) + "), got " +
                     shape_str(w.shape()));
  }
}

}  // namespace

TextVisionAttention text_to_vision_attend(const Tensor& t, const Tensor& f,
                                          const AlignmentParams& params) {
  if (t.rank() != 2) {
    throw ShapeError("text_to_vision_attend: T must be {N_c, d_t}, got " +
                     shape_str(t.shape()));
  }
  if (f.rank() != 3) {
    throw ShapeError("text_to_vision_attend: features must be {C,H,W}, got " +
                     shape_str(f.shape()));
  }
  const std::size_t d = params.w_q_tv.shape()[1];
  check_proj(params.w_q_tv, t.shape()[1], d, "text_to_vision_attend", "W_q");
  check_proj(params.w_k_tv, f.shape()[0], d, "text_to_vision_attend", "W_k");
  check_proj(params.w_v_tv, f.shape()[0], d, "text_to_vision_attend", "W_v");
  auto [a, ctx] =
      text_to_vision_attend_any(t, f, params.w_q_tv, params.w_k_tv, params.w_v_tv);
  return TextVisionAttention{std::move(a), std::move(ctx)};
}

Tensor build_visual_token(const std::vector<Tensor>& pyramid) {
  if (pyramid.empty()) throw ParamError("build_visual_token: empty pyramid");
  const std::size_t c = pyramid.front().rank() == 3 ? pyramid.front().shape()[0] : 0;
  Tensor u(Shape{pyramid.size(), c});
  for (std::size_t i = 0; i < pyramid.size(); ++i) {
    const Tensor& p = pyramid[i];
    if (p.rank() != 3 || p.shape()[0] != c) {
      throw ShapeError("build_visual_token: level " + std::to_string(i) +
                       " has shape " + shape_str(p.shape()) +
                       ", expected a common channel width of " + std::to_string(c));
    }
    const Tensor pooled = global_avg_pool(p);
    for (std::size_t j = 0; j < c; ++j) u[i * c + j] = pooled[j];
  }
  return u;
}

Tensor build_visual_token(const std::vector<Tensor>& pyramid,
                          const std::vector<Tensor>& scale_proj) {
  if (pyramid.empty()) throw ParamError("build_visual_token: empty pyramid");
  if (scale_proj.size() != pyramid.size()) {
    throw ParamError("build_visual_token: " + std::to_string(scale_proj.size()) +
                     " projections for " + std::to_string(pyramid.size()) + " levels");
  }
  const std::size_t c = scale_proj.front().shape()[1];
  Tensor u(Shape{pyramid.size(), c});
  for (std::size_t i = 0; i < pyramid.size(); ++i) {
    const Tensor& p = pyramid[i];
    if (p.rank() != 3) {
      throw ShapeError("build_visual_token: level " + std::to_string(i) +
                       " has shape " + shape_str(p.shape()));
    }
    check_proj(scale_proj[i], p.shape()[0], c, "build_visual_token", "scale projection");
    const Tensor pooled = global_avg_pool(p);
    const Tensor row = matmul(reshape(pooled, Shape{1, pooled.size()}), scale_proj[i]);
    for (std::size_t j = 0; j < c; ++j) u[i * c + j] = row[j];
  }
  return u;
}

Tensor update_text(const Tensor& t, const Tensor& u, const AlignmentParams& params) {
  if (t.rank() != 2 || u.rank() != 2) {
    throw ShapeError("update_text: T and U must be rank 2, got " +
                     shape_str(t.shape()) + " and " + shape_str(u.shape()));
  }
  const std::size_t d = params.w_q_up.shape()[1];
  check_proj(params.w_q_up, t.shape()[1], d, "update_text", "W_q");
  check_proj(params.w_k_up, u.shape()[1], d, "update_text", "W_k");
  check_proj(params.w_v_up, u.shape()[1], d, "update_text", "W_v");
  check_proj(params.w_o_up, d, t.shape()[1], "update_text", "W_o");
  return update_text_any(t, u, params.w_q_up, params.w_k_up, params.w_v_up,
                         params.w_o_up);
}

Tensor region_text_similarity(const Tensor& r, const Tensor& t,
                              const MatchingHead& head) {
  if (r.rank() != 2 || t.rank() != 2) {
    throw ShapeError("region_text_similarity: R and T must be rank 2, got " +
                     shape_str(r.shape()) + " and " + shape_str(t.shape()));
  }
  check_proj(head.p_v, r.shape()[1], head.p_v.shape()[1], "region_text_similarity",
             "P_v");
  check_proj(head.p_t, t.shape()[1], head.p_v.shape()[1], "region_text_similarity",
             "P_t");
  Tensor zv;
  Tensor zt;
  try {
    zv = l2_normalize_rows(matmul(r, head.p_v));
  } catch (const NumericError& e) {
    throw NumericError(std::string("region_text_similarity: region projection: ") +
                       e.what());
  }
  try {
    zt = l2_normalize_rows(matmul(t, head.p_t));
  } catch (const NumericError& e) {
    throw NumericError(std::string("region_text_similarity: text projection: ") +
                       e.what());
  }
  return matmul(zv, transpose(zt));
}

double matching_loss(const Tensor& s, const IndexPairs& pairs, double tau) {
  if (pairs.empty()) throw ParamError("matching_loss: empty pair set");
  if (!(tau > 0.0)) {
    throw ParamError("matching_loss: temperature must be positive, got " +
                     std::to_string(tau));
  }
  const Tensor loss = matching_loss_any(s, pairs, Tensor::scalar(tau));
  return loss[0];
}

AlignmentParams init_alignment_params(std::size_t d_t, std::size_t c, std::size_t d,
                                      Rng& rng) {
  if (d_t == 0 || c == 0 || d == 0) {
    throw ParamError("init_alignment_params: all dims must be positive");
  }
  AlignmentParams p;
  const double st = 1.0 / std::sqrt(static_cast<double>(d_t));
  const double sc = 1.0 / std::sqrt(static_cast<double>(c));
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  p.w_q_tv = gaussian_tensor({d_t, d}, rng, st);
  p.w_k_tv = gaussian_tensor({c, d}, rng, sc);
  p.w_v_tv = gaussian_tensor({c, d}, rng, sc);
  p.w_q_up = gaussian_tensor({d_t, d}, rng, st);
  p.w_k_up = gaussian_tensor({c, d}, rng, sc);
  p.w_v_up = gaussian_tensor({c, d}, rng, sc);
  p.w_o_up = gaussian_tensor({d, d_t}, rng, sd);
  return p;
}

MatchingHead init_matching_head(std::size_t d_r, std::size_t d_t, std::size_t d_embed,
                                Rng& rng) {
  if (d_r == 0 || d_t == 0 || d_embed == 0) {
    throw ParamError("init_matching_head: all dims must be positive");
  }
  MatchingHead h;
  h.p_v = gaussian_tensor({d_r, d_embed}, rng, 1.0 / std::sqrt(static_cast<double>(d_r)));
  h.p_t = gaussian_tensor({d_t, d_embed}, rng, 1.0 / std::sqrt(static_cast<double>(d_t)));
  h.tau = 0.07;
  return h;
}

}  // namespace fuselab
