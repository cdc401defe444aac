#pragma once

#include <stdexcept>
#include <string>

namespace cpmp {

// Base for all library errors.  `code()` is a stable machine-readable
// identifier; the CLI prints it on stderr and maps it to exit status 2.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define CPMP_DEFINE_ERROR(NAME)                            \
  class NAME : public Error {                              \
   public:                                                 \
    explicit NAME(const std::string& msg)                  \
        : Error(#NAME, msg) {}                             \
  }

CPMP_DEFINE_ERROR(ZeroCostate);       // all costate entries vanish
CPMP_DEFINE_ERROR(ChartSingularity);  // requested chart does not contain the point
CPMP_DEFINE_ERROR(ControlOutOfSet);   // control value outside the admissible set
CPMP_DEFINE_ERROR(DerivativeFailure); // non-finite value met while differencing
CPMP_DEFINE_ERROR(StepFailure);       // integrator step underflow / non-finite state
CPMP_DEFINE_ERROR(GridMismatch);      // paired sequences sampled on different grids
CPMP_DEFINE_ERROR(RankDeficient);     // target Jacobian lost row rank
CPMP_DEFINE_ERROR(EvaluationFailure); // objective not finite anywhere on the grid
CPMP_DEFINE_ERROR(BudgetExceeded);    // enumeration larger than the configured cap
CPMP_DEFINE_ERROR(NoConvergence);     // iteration ended without meeting tolerance
CPMP_DEFINE_ERROR(InvalidInput);      // malformed user input / precondition breach

#undef CPMP_DEFINE_ERROR

}  // namespace cpmp
