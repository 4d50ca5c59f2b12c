#ifndef MELSWIM_MOBILITY_HPP
#define MELSWIM_MOBILITY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <utility>

#include "melswim/common.hpp"
#include "melswim/params.hpp"

namespace melswim {

/// The 4x4 drag matrix E(alpha) relating body-frame generalized velocities
/// (xdot_theta, ydot_theta, thetadot, alphadot) to generalized hydrodynamic
/// loads: rows 1-2 give the total drag force in the segment-1 frame, row 3
/// the total drag torque about the joint, row 4 the drag torque on segment 2
/// about the joint.
inline Eigen::Matrix4d e_blocks(const SwimmerParams& p, double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double a1 = p.xi1 * p.l1, a2 = p.xi2 * p.l2;
  const double b1 = p.eta1 * p.l1, b2 = p.eta2 * p.l2;
  const double q1 = p.eta1 * p.l1 * p.l1;  // eta1 l1^2
  const double q2 = p.eta2 * p.l2 * p.l2;  // eta2 l2^2

  Eigen::Matrix4d e;
  // E11
  e(0, 0) = -(a1 + a2) * c;
  e(0, 1) = -(a1 + b2) * s;
  e(1, 0) = (b1 + a2) * s;
  e(1, 1) = -(b1 + b2) * c;
  // E12
  e(0, 2) = 0.5 * p.xi1 * p.l1 * p.l2 * s;
  e(0, 3) = 0.0;
  e(1, 2) = 0.5 * p.eta1 * p.l1 * (p.l1 + p.l2 * c);
  e(1, 3) = 0.5 * q1;
  // E21
  e(2, 0) = -0.5 * q1 * s;
  e(2, 1) = 0.5 * (q1 * c - q2);
  e(3, 0) = 0.0;
  e(3, 1) = -0.5 * q2;
  // E22. The (1,1) inner coefficient on the joint-rate part is l1/3, a
  // length, as the dimensions of the moment integral require.
  e(2, 2) = -q1 * (0.25 * p.l2 * c + p.l1 / 3.0) - q2 * p.l2 / 12.0;
  e(2, 3) = -q1 * p.l1 / 3.0;
  e(3, 2) = -q2 * p.l2 / 12.0;
  e(3, 3) = 0.0;
  return e;
}

/// Blockwise derivative dE/dalpha.
inline Eigen::Matrix4d e_blocks_derivative(const SwimmerParams& p, double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double a1 = p.xi1 * p.l1, a2 = p.xi2 * p.l2;
  const double b1 = p.eta1 * p.l1, b2 = p.eta2 * p.l2;
  const double q1 = p.eta1 * p.l1 * p.l1;
  const double q2 = p.eta2 * p.l2 * p.l2;

  Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
  d(0, 0) = (a1 + a2) * s;
  d(0, 1) = -(a1 + b2) * c;
  d(1, 0) = (b1 + a2) * c;
  d(1, 1) = (b1 + b2) * s;
  d(0, 2) = 0.5 * p.xi1 * p.l1 * p.l2 * c;
  d(1, 2) = -0.5 * p.eta1 * p.l1 * p.l2 * s;
  d(2, 0) = -0.5 * q1 * c;
  d(2, 1) = -0.5 * q1 * s;
  d(2, 2) = 0.25 * q1 * p.l2 * s;
  (void)q2;
  return d;
}

/// Closed-form determinant of E(alpha); strictly negative for valid
/// parameters.
inline double det_e_closed_form(const SwimmerParams& p, double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double a1 = p.xi1 * p.l1, a2 = p.xi2 * p.l2;
  const double b1 = p.eta1 * p.l1, b2 = p.eta2 * p.l2;
  const double lead = -(1.0 / 9.0) * p.eta1 * p.eta2 * std::pow(p.l1, 3) * std::pow(p.l2, 3);
  return lead * (0.25 * (a1 + a2) * (b1 + b2) * c * c +
                 (a1 + 0.25 * b2) * (0.25 * b1 + a2) * s * s);
}

/// E(alpha) together with its determinant and the two columns of its inverse
/// that the control-affine dynamics are built from. x3/x4 are expressed in
/// the rotating basis (first two components in the segment-2 frame).
struct MobilityDecomposition {
  Eigen::Matrix4d e_mat;
  double det_e = 0.0;
  Eigen::Vector4d x3;
  Eigen::Vector4d x4;
};

/// Assembles E(alpha), computes the determinant by both the generic LU route
/// and the closed form (they must agree), and solves E v = e_k for the third
/// and fourth inverse columns rather than forming an explicit inverse.
inline MobilityDecomposition e_matrix(const SwimmerParams& p, double alpha) {
  MobilityDecomposition d;
  d.e_mat = e_blocks(p, alpha);

  Eigen::PartialPivLU<Eigen::Matrix4d> lu(d.e_mat);
  const double det_generic = lu.determinant();
  const double det_closed = det_e_closed_form(p, alpha);
  const double scale = std::max(std::abs(det_generic), std::abs(det_closed));
  if (!(std::abs(det_generic - det_closed) <= tol::algebraic_rel * scale)) {
    std::ostringstream msg;
    msg << "determinant routes disagree at alpha=" << alpha << ": generic=" << det_generic
        << " closed=" << det_closed;
    throw ConsistencyError(msg.str());
  }
  if (!(det_closed < 0.0))
    throw ConsistencyError("drag matrix determinant must be negative");

  d.det_e = det_closed;
  d.x3 = lu.solve(Eigen::Vector4d::Unit(2));
  d.x4 = lu.solve(Eigen::Vector4d::Unit(3));
  return d;
}

/// x3, x4 and their alpha-derivatives, via d(E^-1)/dalpha = -E^-1 E' E^-1
/// applied to the unit vectors (two extra solves, no explicit inverse).
struct MobilityWithDerivatives {
  MobilityDecomposition m;
  Eigen::Vector4d dx3;
  Eigen::Vector4d dx4;
};

inline MobilityWithDerivatives e_matrix_with_derivatives(const SwimmerParams& p, double alpha) {
  MobilityWithDerivatives r;
  r.m = e_matrix(p, alpha);
  Eigen::PartialPivLU<Eigen::Matrix4d> lu(r.m.e_mat);
  const Eigen::Matrix4d de = e_blocks_derivative(p, alpha);
  r.dx3 = -lu.solve(de * r.m.x3);
  r.dx4 = -lu.solve(de * r.m.x4);
  return r;
}

}  // namespace melswim

#endif  // MELSWIM_MOBILITY_HPP
