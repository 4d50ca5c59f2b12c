#ifndef MELSWIM_LINEARIZE_HPP
#define MELSWIM_LINEARIZE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "melswim/common.hpp"
#include "melswim/integrate.hpp"
#include "melswim/mobility.hpp"
#include "melswim/model.hpp"
#include "melswim/params.hpp"
#include "melswim/state.hpp"

namespace melswim {

enum class Field { F0, F1, F2, X3, X4 };

namespace detail {

/// Rotating-basis value and alpha-derivative of a field, as functions of
/// alpha alone.
inline void field_rotating(const SwimmerParams& p, Field which, double alpha,
                           Eigen::Vector4d& g, Eigen::Vector4d& dg) {
  const MobilityWithDerivatives md = e_matrix_with_derivatives(p, alpha);
  const double c = std::cos(alpha), s = std::sin(alpha);
  switch (which) {
    case Field::X3:
      g = md.m.x3;
      dg = md.dx3;
      break;
    case Field::X4:
      g = md.m.x4;
      dg = md.dx4;
      break;
    case Field::F0:
      g = -p.kappa * alpha * md.m.x4;
      dg = -p.kappa * md.m.x4 - p.kappa * alpha * md.dx4;
      break;
    case Field::F1:
      g = p.m1 * s * md.m.x3;
      dg = p.m1 * c * md.m.x3 + p.m1 * s * md.dx3;
      break;
    case Field::F2:
      g = -(p.m1 * c + p.m2) * md.m.x3 - p.m2 * md.m.x4;
      dg = p.m1 * s * md.m.x3 - (p.m1 * c + p.m2) * md.dx3 - p.m2 * md.dx4;
      break;
  }
}

}  // namespace detail

inline Eigen::Vector4d field_value(const SwimmerParams& p, Field which, const State& z) {
  Eigen::Vector4d g, dg;
  detail::field_rotating(p, which, z.alpha, g, dg);
  return lab_from_rotating(z.theta, g);
}

/// Exact Jacobian of a lab-frame field. Every field is Q(theta) g(alpha)
/// with Q = blkdiag(R_theta, I), so only the theta and alpha columns are
/// nonzero: dG/dtheta = Q'(theta) g and dG/dalpha = Q(theta) g'(alpha), with
/// g' assembled from d(E^{-1})/dalpha = -E^{-1} E' E^{-1} via linear solves.
inline Eigen::Matrix4d jacobian_field(const SwimmerParams& p, Field which, const State& z) {
  Eigen::Vector4d g, dg;
  detail::field_rotating(p, which, z.alpha, g, dg);
  const double c = std::cos(z.theta), s = std::sin(z.theta);
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 2) = -s * g[0] - c * g[1];
  j(1, 2) = c * g[0] - s * g[1];
  j.col(3) = lab_from_rotating(z.theta, dg);
  return j;
}

/// Central-difference Jacobian of an arbitrary state-to-vector map.
inline Eigen::Matrix4d jacobian_fd(const std::function<Eigen::Vector4d(const State&)>& f,
                                   const State& z, double step) {
  Eigen::Matrix4d j;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d zp = z.vec(), zm = z.vec();
    zp[k] += step;
    zm[k] -= step;
    j.col(k) = (f(State::from_vec(zp)) - f(State::from_vec(zm))) / (2.0 * step);
  }
  return j;
}

inline Eigen::Matrix4d jacobian_field_fd(const SwimmerParams& p, Field which, const State& z,
                                         double step = tol::jacobian_fd_abs) {
  return jacobian_fd([&](const State& zz) { return field_value(p, which, zz); }, z, step);
}

/// Analytic Jacobian cross-checked against central differences at two steps;
/// disagreement beyond 1e-5 absolute means the blockwise dE/dalpha
/// transcription is wrong.
inline Eigen::Matrix4d jacobian_field_checked(const SwimmerParams& p, Field which,
                                              const State& z) {
  const Eigen::Matrix4d j = jacobian_field(p, which, z);
  const double d6 = (j - jacobian_field_fd(p, which, z, 1e-6)).cwiseAbs().maxCoeff();
  const double d5 = (j - jacobian_field_fd(p, which, z, 1e-5)).cwiseAbs().maxCoeff();
  if (std::min(d6, d5) > 1e-5)
    throw ConsistencyError("analytic field Jacobian disagrees with finite differences");
  return j;
}

struct KalmanResult {
  int rank = 0;
  Eigen::Matrix<double, 4, 8> c_mat;
  Eigen::Vector4d singular_values;
};

/// Rank of [B, AB, A^2B, A^3B] for the system linearized at the straight
/// equilibrium with zero control.
inline KalmanResult kalman_rank_at_origin(const SwimmerParams& p) {
  const State o = State::origin();
  const Eigen::Matrix4d a = jacobian_field(p, Field::F0, o);
  Eigen::Matrix<double, 4, 2> b;
  b.col(0) = field_value(p, Field::F1, o);
  b.col(1) = field_value(p, Field::F2, o);
  KalmanResult r;
  Eigen::Matrix<double, 4, 2> power = b;
  for (int k = 0; k < 4; ++k) {
    r.c_mat.block<4, 2>(0, 2 * k) = power;
    power = a * power;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 8>> svd(r.c_mat);
  r.singular_values = svd.singularValues();
  const double cutoff = tol::rank_rel * r.singular_values[0];
  r.rank = 0;
  for (int k = 0; k < 4; ++k)
    if (r.singular_values[k] > cutoff) ++r.rank;
  return r;
}

struct LinearizationSample {
  double t = 0.0;
  Eigen::Matrix4d a_mat;
  Eigen::Matrix<double, 4, 2> b_mat;
};

/// A(t), B(t) of the linearization along a reference trajectory: A is the
/// Jacobian of the frozen-control right-hand side, B stacks F1 and F2 at the
/// reference state.
inline std::vector<LinearizationSample> linearize_along(const SwimmerParams& p,
                                                        const Trajectory& traj) {
  std::vector<LinearizationSample> out;
  out.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const State& z = traj.states[i];
    const Control u = traj.signal.eval(traj.times[i]);
    LinearizationSample s;
    s.t = traj.times[i];
    s.a_mat = jacobian_field(p, Field::F0, z) + u.h_par * jacobian_field(p, Field::F1, z) +
              u.h_perp * jacobian_field(p, Field::F2, z);
    s.b_mat.col(0) = field_value(p, Field::F1, z);
    s.b_mat.col(1) = field_value(p, Field::F2, z);
    out.push_back(s);
  }
  return out;
}

struct GramianResult {
  int rank = 0;
  Eigen::Matrix4d w;
  Eigen::Vector4d eigenvalues;      // of the Gramian, descending
  Eigen::Vector4d singular_values;  // of the input-to-state map: sqrt(eigenvalues)
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Controllability Gramian of the sampled time-varying linearization on
/// [t0, t1], kept in square-root form: the transition matrices come from the
/// variational system Pdot = -P A(t) (P referenced at t0), the discretized
/// input-to-state map is assembled column-blockwise as Phi(t1, t_k) B_k with
/// trapezoid weights, and the rank decision reads that map's own SVD. Forming
/// W = M Mᵀ first and eigensolving would clamp the weak direction at
/// eps * ||W||, squaring away exactly the margin the rank test needs. A and B
/// are sampled, so the grid bounds the quadrature accuracy; callers wanting
/// small singular values resolved must supply dense samples.
inline GramianResult gramian_rank(const std::vector<LinearizationSample>& samples, double t0,
                                  double t1) {
  if (samples.size() < 2 || !(t0 < t1))
    throw InvalidParameterError("gramian needs at least two samples and t0 < t1");
  std::size_t i0 = 0, i1 = samples.size() - 1;
  while (i0 + 1 < samples.size() && samples[i0].t < t0) ++i0;
  while (i1 > 0 && samples[i1].t > t1) --i1;
  if (i0 >= i1) throw InvalidParameterError("no sample interval inside [t0, t1]");

  const std::size_t n = i1 - i0 + 1;
  Eigen::MatrixXd cols(4, 2 * n);
  Eigen::Matrix4d pmat = Eigen::Matrix4d::Identity();
  cols.block<4, 2>(0, 0) = samples[i0].b_mat;
  for (std::size_t i = i0; i < i1; ++i) {
    const double h = samples[i + 1].t - samples[i].t;
    const Eigen::Matrix4d amid = 0.5 * (samples[i].a_mat + samples[i + 1].a_mat);
    const Eigen::Matrix4d k1 = -pmat * samples[i].a_mat;
    const Eigen::Matrix4d k2 = -(pmat + 0.5 * h * k1) * amid;
    const Eigen::Matrix4d k3 = -(pmat + 0.5 * h * k2) * amid;
    const Eigen::Matrix4d k4 = -(pmat + h * k3) * samples[i + 1].a_mat;
    pmat += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cols.block<4, 2>(0, 2 * (i - i0 + 1)) = pmat * samples[i + 1].b_mat;
  }

  // Transport the t0-referenced columns to t1 with Phi(t1, t0) = P(t1)^{-1},
  // then scale by the square roots of the trapezoid weights.
  const Eigen::Matrix4d phi = Eigen::PartialPivLU<Eigen::Matrix4d>(pmat).inverse();
  cols = phi * cols;
  for (std::size_t k = 0; k < n; ++k) {
    const double hl = k > 0 ? samples[i0 + k].t - samples[i0 + k - 1].t : 0.0;
    const double hr = k + 1 < n ? samples[i0 + k + 1].t - samples[i0 + k].t : 0.0;
    cols.middleCols<2>(2 * k) *= std::sqrt(0.5 * (hl + hr));
  }

  GramianResult r;
  r.w = cols * cols.transpose();
  r.w = 0.5 * (r.w + r.w.transpose());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cols.transpose());
  for (int k = 0; k < 4; ++k) r.singular_values[k] = svd.singularValues()[k];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(r.w);
  for (int k = 0; k < 4; ++k) r.eigenvalues[k] = std::max(es.eigenvalues()[3 - k], 0.0);
  r.sigma_max = r.singular_values[0];
  r.sigma_min = r.singular_values[3];
  const double cutoff = tol::gramian_rank_rel * r.sigma_max;
  for (int k = 0; k < 4; ++k)
    if (r.singular_values[k] > cutoff) ++r.rank;
  return r;
}

}  // namespace melswim

#endif  // MELSWIM_LINEARIZE_HPP
