#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuselab/gradcheck.hpp"

namespace fuselab {

// Finite-difference gradient suites over the full module pipelines at small
// shapes. Deterministic for a given seed: same parameters, same inputs,
// same report bytes.
std::vector<std::string> gradsuite_modules();

std::vector<GradCheckReport> run_gradsuite(const std::string& module,
                                           std::uint64_t seed);

}  // namespace fuselab
