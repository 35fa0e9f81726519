#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fuselab/autodiff.hpp"
#include "fuselab/tensor.hpp"

namespace fuselab {

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct GradCheckReport {
  std::string parameter;
  double max_rel_err = 0.0;
  bool pass = false;
};

// A differentiable scalar program: given a tape and the recorded parameter
// leaves (same order as the NamedTensor list), build the loss and return it.
using TapeFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Compares tape gradients of f against central finite differences with the
// given step. Per-element relative error is
//   |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)
// and a parameter passes iff its max relative error is below 1e-4.
// step must lie in [1e-7, 1e-3]; a non-finite loss raises NumericError.
std::vector<GradCheckReport> gradcheck(const TapeFn& f,
                                       const std::vector<NamedTensor>& params,
                                       double step = 1e-5);

// Same comparison but against a caller-supplied analytic gradient, one
// tensor per parameter. Lets tests run negative controls (e.g. a sign flip).
std::vector<GradCheckReport> gradcheck_against(const TapeFn& f,
                                               const std::vector<NamedTensor>& params,
                                               const std::vector<Tensor>& analytic,
                                               double step = 1e-5);

// Evaluates f once and returns the tape gradients, one per parameter.
std::vector<Tensor> tape_gradients(const TapeFn& f,
                                   const std::vector<NamedTensor>& params);

// "parameter,max_rel_err,pass" header plus one row per report; %.17g floats,
// pass as 1/0. Byte-stable for fixed inputs.
std::string gradcheck_csv(const std::vector<GradCheckReport>& reports);

}  // namespace fuselab
