#pragma once

#include <stdexcept>
#include <string>

namespace fuselab {

// Base for every error the library raises on purpose. The CLI maps
// ShapeError/ParamError/ContractError/NumericError to exit code 1 and
// IoError to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor shapes (dimension mismatch, bad rank).
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

// Invalid argument or configuration value (even kernel, empty pair set, ...).
class ParamError : public Error {
 public:
  explicit ParamError(const std::string& msg) : Error("parameter error: " + msg) {}
};

// An API precondition on call ordering or node structure was violated.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

// Numerical degeneracy or non-finite evaluation.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric error: " + msg) {}
};

// File format / filesystem failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

}  // namespace fuselab
