#pragma once

#include <stdexcept>
#include <string>

namespace pentrap {

// Base class for all pentrap errors. The CLI maps each concrete type to a
// distinct exit code (see tools/).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PENTRAP_DEFINE_ERROR(NAME)          \
  class NAME : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

// Configuration / setup
PENTRAP_DEFINE_ERROR(ValidationError);   // invariant violated in an input struct
PENTRAP_DEFINE_ERROR(ParseError);        // malformed config file
PENTRAP_DEFINE_ERROR(UnstableTrap);      // omega_perp^2 <= omega_w^2 or <= 0

// Physics evaluation
PENTRAP_DEFINE_ERROR(CoincidentIons);        // pair separation below minimum
PENTRAP_DEFINE_ERROR(NoConvergence);         // minimizer exceeded iteration budget
PENTRAP_DEFINE_ERROR(SaddleDetected);        // converged point is not a minimum
PENTRAP_DEFINE_ERROR(NotPositiveDefinite);   // stiffness matrix failed LLT
PENTRAP_DEFINE_ERROR(FactorizationFailure);  // energy matrix not factorizable
PENTRAP_DEFINE_ERROR(ImaginaryFrequency);    // analytic frequency under the root < 0

// Time evolution / spectra
PENTRAP_DEFINE_ERROR(StepTooLarge);      // dt does not resolve the fastest mode
PENTRAP_DEFINE_ERROR(NumericalBlowup);   // non-finite coordinate during integration
PENTRAP_DEFINE_ERROR(GridMismatch);      // trajectories disagree on sampling grid
PENTRAP_DEFINE_ERROR(DurationMismatch);  // ODF sequence length != trajectory length

// I/O
PENTRAP_DEFINE_ERROR(IoError);

#undef PENTRAP_DEFINE_ERROR

}  // namespace pentrap
