#pragma once

#include <stdexcept>
#include <string>

namespace perk {

/// Failure classes raised by the library. The CLI maps each class onto a
/// distinct process exit code (see README).
enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  parse,
  io,
  singular_matrix,
  no_convergence,
  positive_real_part,
  empty_spectrum,
  zero_radius,
  nonpositive_gamma,
  oracle_mismatch,
  order_condition,
  coupling_condition,
  internal_consistency,
  zero_division,
  non_finite,
  no_feasible_member,
  richardson_disagreement,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::singular_matrix: return "singular-matrix";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::positive_real_part: return "positive-real-part";
    case ErrorCode::empty_spectrum: return "empty-spectrum";
    case ErrorCode::zero_radius: return "zero-radius";
    case ErrorCode::nonpositive_gamma: return "nonpositive-gamma";
    case ErrorCode::oracle_mismatch: return "oracle-mismatch";
    case ErrorCode::order_condition: return "order-condition";
    case ErrorCode::coupling_condition: return "coupling-condition";
    case ErrorCode::internal_consistency: return "internal-consistency";
    case ErrorCode::zero_division: return "zero-division";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::no_feasible_member: return "no-feasible-member";
    case ErrorCode::richardson_disagreement: return "richardson-disagreement";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace perk
