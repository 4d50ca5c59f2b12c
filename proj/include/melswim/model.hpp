#ifndef MELSWIM_MODEL_HPP
#define MELSWIM_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <utility>

#include "melswim/common.hpp"
#include "melswim/mobility.hpp"
#include "melswim/params.hpp"
#include "melswim/state.hpp"

namespace melswim {

/// Rotates the (x, y) components of a rotating-basis 4-vector into the lab
/// frame; the angle components are frame-independent.
inline Eigen::Vector4d lab_from_rotating(double theta, const Eigen::Vector4d& v) {
  const double c = std::cos(theta), s = std::sin(theta);
  return Eigen::Vector4d(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2], v[3]);
}

inline Eigen::Vector4d rotating_from_lab(double theta, const Eigen::Vector4d& v) {
  return lab_from_rotating(-theta, v);
}

/// The control-affine decomposition zdot = F0 + h_par F1 + h_perp F2 in the
/// rotating basis, as functions of alpha alone.
///
/// Sign convention: with E(alpha) mapping velocities to drag loads and the
/// spring torque +kappa*alpha acting on segment 2, the drift solves
/// E w = (0,0,0,-kappa*alpha), i.e. F0 = -kappa*alpha*X4. The minus sign is
/// what makes the straight state an attractor of the uncontrolled dynamics;
/// the quadrature oracle and the dual-route rhs check both pin it.
struct RotatingFields {
  Eigen::Vector4d x3, x4;
  Eigen::Vector4d f0, f1, f2;
};

inline RotatingFields fields_rotating(const SwimmerParams& p, double alpha) {
  const MobilityDecomposition m = e_matrix(p, alpha);
  RotatingFields f;
  f.x3 = m.x3;
  f.x4 = m.x4;
  const double c = std::cos(alpha), s = std::sin(alpha);
  f.f0 = -p.kappa * alpha * m.x4;
  f.f1 = p.m1 * s * m.x3;
  f.f2 = -(p.m1 * c + p.m2) * m.x3 - p.m2 * m.x4;
  return f;
}

struct VectorFields {
  Eigen::Vector4d f0, f1, f2;
};

/// F0, F1, F2 in the lab frame at state z.
inline VectorFields vector_fields(const SwimmerParams& p, const State& z) {
  const RotatingFields f = fields_rotating(p, z.alpha);
  return VectorFields{lab_from_rotating(z.theta, f.f0), lab_from_rotating(z.theta, f.f1),
                      lab_from_rotating(z.theta, f.f2)};
}

/// Generalized magnetic/elastic load vector on the right-hand side of the
/// mobility balance: zero net force, torques from the field on both segments
/// and from the spring on segment 2.
inline Eigen::Vector4d load_vector(const SwimmerParams& p, double alpha, const Control& u) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double torque1m = p.m1 * (c * u.h_perp - s * u.h_par);
  const double torque2m = p.m2 * u.h_perp;
  return Eigen::Vector4d(0.0, 0.0, -(torque1m + torque2m), -p.kappa * alpha - torque2m);
}

/// zdot via the control-affine fields.
inline Eigen::Vector4d rhs(const SwimmerParams& p, const State& z, const Control& u) {
  const RotatingFields f = fields_rotating(p, z.alpha);
  const Eigen::Vector4d w = f.f0 + u.h_par * f.f1 + u.h_perp * f.f2;
  return lab_from_rotating(z.theta, w);
}

/// zdot by assembling the full mobility matrix
/// M = blkdiag(R_{theta+alpha}, I) E(alpha) blkdiag(R_{-theta}, I) and
/// solving M zdot = load_vector directly. Exists to cross-check rhs(); the
/// two routes must agree to tol::algebraic_rel.
inline Eigen::Vector4d rhs_direct(const SwimmerParams& p, const State& z, const Control& u) {
  const Eigen::Matrix4d e = e_blocks(p, z.alpha);
  const double ca = std::cos(z.theta + z.alpha), sa = std::sin(z.theta + z.alpha);
  const double ct = std::cos(z.theta), st = std::sin(z.theta);
  Eigen::Matrix4d left = Eigen::Matrix4d::Identity();
  left(0, 0) = ca; left(0, 1) = -sa; left(1, 0) = sa; left(1, 1) = ca;
  Eigen::Matrix4d right = Eigen::Matrix4d::Identity();
  right(0, 0) = ct; right(0, 1) = st; right(1, 0) = -st; right(1, 1) = ct;
  const Eigen::Matrix4d mob = left * e * right;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(mob);
  if (!lu.isInvertible())
    throw SingularMobilityError("mobility matrix not invertible; transcription bug");
  return lu.solve(load_vector(p, z.alpha, u));
}

/// rhs() with the dual-route consistency check enforced.
inline Eigen::Vector4d rhs_checked(const SwimmerParams& p, const State& z, const Control& u) {
  const Eigen::Vector4d a = rhs(p, z, u);
  const Eigen::Vector4d b = rhs_direct(p, z, u);
  const double scale = std::max({a.norm(), b.norm(), 1e-30});
  if (!((a - b).norm() <= tol::algebraic_rel * scale))
    throw ConsistencyError("field-route and direct-route rhs disagree");
  return a;
}

/// Response slope of alpha to a perpendicular field at the straight
/// configuration: alphadot = gain * h_perp at alpha = 0. Vanishes exactly
/// when the magnetization balance does.
inline double straight_response_gain(const SwimmerParams& p) {
  return 3.0 * magnetization_balance(p) / (p.l1 * p.l2 * (p.eta1 * p.l1 + p.eta2 * p.l2));
}

/// Conserved drag-weighted centroid for isotropic drag (eta == xi on both
/// segments): both components are constant along every controlled
/// trajectory. Returns nullopt when the degeneracy does not hold.
inline std::optional<std::pair<double, double>> first_integrals(const SwimmerParams& p,
                                                                const State& z) {
  if (!(p.eta1 == p.xi1 && p.eta2 == p.xi2)) return std::nullopt;
  const double w = p.eta1 * p.l1 / (2.0 * (p.eta1 * p.l1 + p.eta2 * p.l2));
  const double cx = z.x - w * (p.l1 * std::cos(z.theta + z.alpha) + p.l2 * std::cos(z.theta));
  const double cy = z.y - w * (p.l1 * std::sin(z.theta + z.alpha) + p.l2 * std::sin(z.theta));
  return std::make_pair(cx, cy);
}

/// Integrated drag loads per segment: lab-frame total forces and z-torques
/// about the joint, as closed forms of the candidate velocity zdot.
struct SegmentLoads {
  Eigen::Vector2d f1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d f2 = Eigen::Vector2d::Zero();
  double t1 = 0.0;
  double t2 = 0.0;
};

inline SegmentLoads segment_loads_closed_form(const SwimmerParams& p, const State& z,
                                              const Eigen::Vector4d& zdot) {
  const double ct = std::cos(z.theta), st = std::sin(z.theta);
  const double thetadot = zdot[2], alphadot = zdot[3];
  // Velocity of the segment-2 midpoint in the segment-2 frame.
  const double vx = ct * zdot[0] + st * zdot[1];
  const double vy = -st * zdot[0] + ct * zdot[1];
  const double c = std::cos(z.alpha), s = std::sin(z.alpha);

  SegmentLoads out;
  // Segment 1 force in its own frame, then rotated to the lab.
  const Eigen::Vector2d r_alpha_v(c * vx + s * vy, -s * vx + c * vy);
  const Eigen::Vector2d r_alpha_ey(s, c);
  Eigen::Vector2d f1_body;
  f1_body[0] = p.xi1 * (-p.l1 * r_alpha_v[0] + 0.5 * p.l1 * p.l2 * thetadot * r_alpha_ey[0]);
  f1_body[1] = p.eta1 * (-p.l1 * r_alpha_v[1] + 0.5 * p.l1 * p.l2 * thetadot * r_alpha_ey[1] +
                         0.5 * p.l1 * p.l1 * (thetadot + alphadot));
  const double c1 = std::cos(z.theta + z.alpha), s1 = std::sin(z.theta + z.alpha);
  out.f1 = Eigen::Vector2d(c1 * f1_body[0] - s1 * f1_body[1], s1 * f1_body[0] + c1 * f1_body[1]);

  // Segment 2 force: -l2 R_theta D2 R_{-theta} v, assembled in the lab frame.
  const Eigen::Vector2d f2_body(-p.l2 * p.xi2 * vx, -p.l2 * p.eta2 * vy);
  out.f2 = Eigen::Vector2d(ct * f2_body[0] - st * f2_body[1], st * f2_body[0] + ct * f2_body[1]);

  // Torques about the joint. The inner coefficient on (thetadot + alphadot)
  // is l1/3 by the dimensional analysis of the second moment of the arm.
  out.t1 = p.eta1 * p.l1 * p.l1 *
           (0.5 * (-s * vx + c * vy) - 0.25 * p.l2 * c * thetadot -
            (p.l1 / 3.0) * (thetadot + alphadot));
  out.t2 = -0.5 * p.eta2 * p.l2 * p.l2 * (vy + p.l2 * thetadot / 6.0);
  return out;
}

/// Generalized loads implied by the E(alpha) transcription for a candidate
/// velocity: (total lab-frame force, total torque, segment-2 torque).
/// Comparison target for the quadrature oracle.
inline Eigen::Vector4d generalized_loads_from_e(const SwimmerParams& p, const State& z,
                                                const Eigen::Vector4d& zdot) {
  const Eigen::Matrix4d e = e_blocks(p, z.alpha);
  const Eigen::Vector4d w(std::cos(z.theta) * zdot[0] + std::sin(z.theta) * zdot[1],
                          -std::sin(z.theta) * zdot[0] + std::cos(z.theta) * zdot[1], zdot[2],
                          zdot[3]);
  Eigen::Vector4d g = e * w;
  const double c1 = std::cos(z.theta + z.alpha), s1 = std::sin(z.theta + z.alpha);
  const double gx = c1 * g[0] - s1 * g[1];
  const double gy = s1 * g[0] + c1 * g[1];
  g[0] = gx;
  g[1] = gy;
  return g;
}

}  // namespace melswim

#endif  // MELSWIM_MODEL_HPP
