#include "fuselab/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "fuselab/errors.hpp"

namespace fuselab {

namespace {

constexpr double kPassThreshold = 1e-4;

void check_step(double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw ParamError("gradcheck: step must lie in [1e-7, 1e-3], got " +
                     std::to_string(step));
  }
}

double eval_loss(const TapeFn& f, const std::vector<Tensor>& values) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(values.size());
  for (const Tensor& v : values) vars.push_back(tape.input(v));
  const ad::Var loss = f(tape, vars);
  const Tensor& lv = tape.value(loss);
  if (lv.size() != 1) {
    throw ContractError("gradcheck: loss must be scalar, got shape " +
                        shape_str(lv.shape()));
  }
  if (!std::isfinite(lv[0])) {
    throw NumericError("gradcheck: non-finite loss evaluation");
  }
  return lv[0];
}

}  // namespace

std::vector<Tensor> tape_gradients(const TapeFn& f,
                                   const std::vector<NamedTensor>& params) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const NamedTensor& p : params) vars.push_back(tape.input(p.value));
  const ad::Var loss = f(tape, vars);
  const Tensor& lv = tape.value(loss);
  if (lv.size() == 1 && !std::isfinite(lv[0])) {
    throw NumericError("gradcheck: non-finite loss evaluation");
  }
  std::map<int, Tensor> grads = tape.backward(loss);
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back(grads.at(static_cast<int>(i)));
  }
  return out;
}

std::vector<GradCheckReport> gradcheck_against(const TapeFn& f,
                                               const std::vector<NamedTensor>& params,
                                               const std::vector<Tensor>& analytic,
                                               double step) {
  check_step(step);
  if (analytic.size() != params.size()) {
    throw ParamError("gradcheck: analytic gradient count " +
                     std::to_string(analytic.size()) + " does not match " +
                     std::to_string(params.size()) + " parameters");
  }
  std::vector<Tensor> values;
  values.reserve(params.size());
  for (const NamedTensor& p : params) values.push_back(p.value);

  std::vector<GradCheckReport> reports;
  reports.reserve(params.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& g_ad = analytic[pi];
    if (g_ad.shape() != params[pi].value.shape()) {
      throw ParamError("gradcheck: gradient shape mismatch for parameter " +
                       params[pi].name);
    }
    GradCheckReport rep;
    rep.parameter = params[pi].name;
    for (std::size_t e = 0; e < g_ad.size(); ++e) {
      const double saved = values[pi][e];
      values[pi][e] = saved + step;
      const double lp = eval_loss(f, values);
      values[pi][e] = saved - step;
      const double lm = eval_loss(f, values);
      values[pi][e] = saved;
      const double g_fd = (lp - lm) / (2.0 * step);
      const double rel = std::fabs(g_ad[e] - g_fd) /
                         std::max(1e-8, std::fabs(g_ad[e]) + std::fabs(g_fd));
      rep.max_rel_err = std::max(rep.max_rel_err, rel);
    }
    rep.pass = rep.max_rel_err < kPassThreshold;
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<GradCheckReport> gradcheck(const TapeFn& f,
                                       const std::vector<NamedTensor>& params,
                                       double step) {
  check_step(step);
  return gradcheck_against(f, params, tape_gradients(f, params), step);
}

std::string gradcheck_csv(const std::vector<GradCheckReport>& reports) {
  std::string out = "parameter,max_rel_err,pass\n";
  char buf[64];
  for (const GradCheckReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.max_rel_err);
    out += r.parameter;
    out += ',';
    out += buf;
    out += ',';
    out += r.pass ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace fuselab
