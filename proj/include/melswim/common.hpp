#ifndef MELSWIM_COMMON_HPP
#define MELSWIM_COMMON_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace melswim {

inline constexpr double kPi = 3.14159265358979323846;

/// Tolerances shared by the implementation and the test suite. Keeping them
/// in one place means a test and the code it checks cannot disagree on what
/// "equal" means.
namespace tol {
/// Exact algebraic identities (dual-route consistency checks).
inline constexpr double algebraic_rel = 1e-10;
/// Quadrature oracle vs closed-form integrated loads.
inline constexpr double quadrature_rel = 1e-8;
/// Singular values below rank_rel * sigma_max count as zero.
inline constexpr double rank_rel = 1e-9;
/// Rank cutoff for Gramians, whose entries live on a squared scale.
inline constexpr double gramian_rank_rel = 1e-10;
/// Analytic Jacobians vs central finite differences.
inline constexpr double jacobian_fd_abs = 1e-6;
/// Central-difference step for Jacobians of composite bracket fields.
inline constexpr double bracket_fd_step = 1e-5;
/// Residual budget for 4x4 linear solves against the identity.
inline constexpr double identity_rel = 1e-12;
}  // namespace tol

class InvalidParameterError : public std::invalid_argument {
 public:
  explicit InvalidParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Two independent computations of the same quantity disagree. Reaching this
/// means a transcription bug, not a runtime condition to handle.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

class SingularMobilityError : public std::runtime_error {
 public:
  explicit SingularMobilityError(const std::string& msg) : std::runtime_error(msg) {}
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, double t)
      : std::runtime_error(msg + " at t=" + std::to_string(t)), time(t) {}
  double time;
};

class BudgetExceededError : public std::runtime_error {
 public:
  explicit BudgetExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

class SynthesisFailureError : public std::runtime_error {
 public:
  explicit SynthesisFailureError(const std::string& msg) : std::runtime_error(msg) {}
};

class BoundExceededError : public std::runtime_error {
 public:
  explicit BoundExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Wraps an angle to (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

}  // namespace melswim

#endif  // MELSWIM_COMMON_HPP
