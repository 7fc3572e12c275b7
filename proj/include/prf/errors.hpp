#pragma once

#include <stdexcept>
#include <string>

namespace prf {

// Adaptive stepper could not proceed (step underflow, step budget, ...).
// Carries the time at which integration stalled.
class IntegratorError : public std::runtime_error {
 public:
  IntegratorError(const std::string& what, double t)
      : std::runtime_error(what + " (at t = " + std::to_string(t) + ")"), t_(t) {}
  double where() const { return t_; }

 private:
  double t_;
};

// A quantity that requires a relaxed tail (integrals to T -> infinity) was
// requested but the signal had not decayed at the end of the horizon.
class ConvergenceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input is formally valid but the requested quantity is undefined for it
// (e.g. a normalized correlation with zero denominator).
class DegenerateInputError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario configuration errors (missing keys, bad values).
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace prf
