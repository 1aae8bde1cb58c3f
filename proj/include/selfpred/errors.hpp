#pragma once

#include <stdexcept>
#include <string>

namespace selfpred {

// Iterative procedure failed to reach its tolerance; carries the final
// residual so callers can report how far off the result was.
struct NonConvergenceError : std::runtime_error {
  NonConvergenceError(const std::string& msg, double residual_)
      : std::runtime_error(msg), residual(residual_) {}
  double residual;
};

// A structural assumption the operation relies on does not hold for the
// given input (e.g. non-commuting transition matrices, non-uniform policy).
struct AssumptionViolationError : std::runtime_error {
  AssumptionViolationError(const std::string& msg, double measure_)
      : std::runtime_error(msg), measure(measure_) {}
  double measure;
};

struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace selfpred
