#pragma once

#include <stdexcept>
#include <string>

namespace hmdp {

// Bad arguments: dimension mismatch, parameters out of range, malformed grids.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Experiment configuration could not be parsed or references unknown names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature budget exhausted, solver divergence, positivity loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The modulus of continuity fails the Dini condition, so psi does not exist.
class DivergentModulusError : public NumericalError {
 public:
  explicit DivergentModulusError(const std::string& where)
      : NumericalError(where +
                       ": the modulus of continuity g violates the Dini condition "
                       "int_0^1 g(t)/t dt < infinity required for existence of psi "
                       "(boundary data must satisfy this, e.g. be Hoelder continuous)") {}
};

}  // namespace hmdp
