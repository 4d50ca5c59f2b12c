#ifndef MELSWIM_PARAMS_HPP
#define MELSWIM_PARAMS_HPP

#include <cmath>
#include <string>

#include "melswim/common.hpp"

namespace melswim {

/// The nine physical constants of the two-link swimmer: segment lengths,
/// tangential (xi) and normal (eta) drag coefficients per segment, magnetic
/// moments, and the torsional stiffness of the elastic joint.
struct SwimmerParams {
  double l1 = 1.0;
  double l2 = 1.0;
  double xi1 = 1.0;
  double xi2 = 1.0;
  double eta1 = 2.0;
  double eta2 = 2.0;
  double m1 = 1.0;
  double m2 = 2.0;
  double kappa = 1.0;

  /// Reference parameter set used throughout tests and docs.
  static SwimmerParams canonical() { return SwimmerParams{}; }
};

/// Weighted balance of the two magnetic moments against the drag geometry.
/// This single expression drives two different degeneracy questions: the
/// dynamics respond to the perpendicular field at the straight configuration
/// iff it is nonzero, and the straight set {alpha = 0} is invariant iff it
/// vanishes.
inline double magnetization_balance(const SwimmerParams& p) {
  const double a = 3.0 + 4.0 * p.l2 / p.l1 + (p.eta2 * p.l2 * p.l2) / (p.eta1 * p.l1 * p.l1);
  const double b = 3.0 + 4.0 * p.l1 / p.l2 + (p.eta1 * p.l1 * p.l1) / (p.eta2 * p.l2 * p.l2);
  return a * p.m1 - b * p.m2;
}

struct ValidationReport {
  bool positivity_ok = false;       ///< lengths, drags, stiffness all > 0
  bool moments_nonzero = false;     ///< m1 != 0 and m2 != 0
  bool anisotropy_present = false;  ///< the two drag gaps eta_i - xi_i are not both zero
  bool normal_dominates = false;    ///< eta1 >= xi1 and eta2 >= xi2
  bool moment_balance_nonzero = false;
  double moment_balance = 0.0;      ///< value of magnetization_balance(p)
  /// True when the moment balance vanishes: a straight swimmer then stays
  /// straight under every field.
  bool straight_set_invariant = false;
  /// True when eta == xi on both segments: the dynamics then conserve two
  /// scalar functions of the state regardless of the control.
  bool isotropic_drag = false;
  bool assumption1_holds = false;
};

/// Validates p and reports every degeneracy indicator. Throws
/// InvalidParameterError for non-finite fields and for non-positive values
/// where positivity is required; sign conditions on the moments are reported,
/// not thrown, so degenerate parameter studies remain expressible.
inline ValidationReport validate_params(const SwimmerParams& p) {
  const struct {
    const char* name;
    double value;
    bool must_be_positive;
  } fields[] = {
      {"l1", p.l1, true},     {"l2", p.l2, true},   {"xi1", p.xi1, true},
      {"xi2", p.xi2, true},   {"eta1", p.eta1, true}, {"eta2", p.eta2, true},
      {"m1", p.m1, false},    {"m2", p.m2, false},  {"kappa", p.kappa, true},
  };
  for (const auto& f : fields) {
    if (!std::isfinite(f.value))
      throw InvalidParameterError(std::string("non-finite field '") + f.name + "'");
    if (f.must_be_positive && f.value <= 0.0)
      throw InvalidParameterError(std::string("non-positive field '") + f.name + "'");
  }

  ValidationReport r;
  r.positivity_ok = true;
  r.moments_nonzero = (p.m1 != 0.0) && (p.m2 != 0.0);
  r.anisotropy_present = (p.eta1 - p.xi1 != 0.0) || (p.eta2 - p.xi2 != 0.0);
  r.normal_dominates = (p.eta1 >= p.xi1) && (p.eta2 >= p.xi2);
  r.moment_balance = magnetization_balance(p);
  r.moment_balance_nonzero = (r.moment_balance != 0.0);
  r.straight_set_invariant = !r.moment_balance_nonzero;
  r.isotropic_drag = (p.eta1 == p.xi1) && (p.eta2 == p.xi2);
  r.assumption1_holds = r.moments_nonzero && r.anisotropy_present && r.normal_dominates &&
                        r.moment_balance_nonzero;
  return r;
}

}  // namespace melswim

#endif  // MELSWIM_PARAMS_HPP
