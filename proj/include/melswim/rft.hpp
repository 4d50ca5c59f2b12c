#ifndef MELSWIM_RFT_HPP
#define MELSWIM_RFT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "melswim/common.hpp"
#include "melswim/model.hpp"
#include "melswim/params.hpp"
#include "melswim/state.hpp"

namespace melswim {

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre nodes/weights by Newton iteration on the Legendre
/// polynomial, seeded with the Chebyshev-like estimate.
inline QuadratureRule gauss_legendre(std::size_t n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double x = std::cos(kPi * (static_cast<double>(k) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double pj = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = pj;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[k] = x;
    r.weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Pointwise resistive-force drag integrated numerically along both
/// segments: per-segment lab-frame total force and z-torque about the joint,
/// for a candidate velocity zdot of the state coordinates. This is the
/// reference the closed forms and the assembled matrix must reproduce.
inline SegmentLoads rft_quadrature_oracle(const SwimmerParams& p, const State& z,
                                          const Eigen::Vector4d& zdot,
                                          std::size_t nodes = 64) {
  const QuadratureRule q = gauss_legendre(nodes);
  const double ct = std::cos(z.theta), st = std::sin(z.theta);
  const double c1 = std::cos(z.theta + z.alpha), s1 = std::sin(z.theta + z.alpha);
  const Eigen::Vector2d e2p(ct, st), e2n(-st, ct);
  const Eigen::Vector2d e1p(c1, s1), e1n(-s1, c1);
  const Eigen::Vector2d v(zdot[0], zdot[1]);
  const double thetadot = zdot[2], alphadot = zdot[3];

  SegmentLoads out;
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    // Segment 1: arclength s in [0, l1] measured from the joint.
    {
      const double s = 0.5 * p.l1 * (q.nodes[k] + 1.0);
      const double w = 0.5 * p.l1 * q.weights[k];
      const Eigen::Vector2d u =
          v - 0.5 * p.l2 * thetadot * e2n - s * (thetadot + alphadot) * e1n;
      const Eigen::Vector2d f = -p.xi1 * u.dot(e1p) * e1p - p.eta1 * u.dot(e1n) * e1n;
      const Eigen::Vector2d r = -s * e1p;  // position relative to the joint
      out.f1 += w * f;
      out.t1 += w * (r[0] * f[1] - r[1] * f[0]);
    }
    // Segment 2: arclength s in [-l2/2, l2/2] measured from the midpoint.
    {
      const double s = 0.5 * p.l2 * q.nodes[k];
      const double w = 0.5 * p.l2 * q.weights[k];
      const Eigen::Vector2d u = v + s * thetadot * e2n;
      const Eigen::Vector2d f = -p.xi2 * u.dot(e2p) * e2p - p.eta2 * u.dot(e2n) * e2n;
      const Eigen::Vector2d r = (s + 0.5 * p.l2) * e2p;
      out.f2 += w * f;
      out.t2 += w * (r[0] * f[1] - r[1] * f[0]);
    }
  }
  return out;
}

/// Generalized loads (total lab force, total joint torque, segment-2 joint
/// torque) from the quadrature oracle, for comparison against the assembled
/// matrix action.
inline Eigen::Vector4d generalized_loads_from_quadrature(const SwimmerParams& p, const State& z,
                                                         const Eigen::Vector4d& zdot,
                                                         std::size_t nodes = 64) {
  const SegmentLoads sl = rft_quadrature_oracle(p, z, zdot, nodes);
  return Eigen::Vector4d(sl.f1[0] + sl.f2[0], sl.f1[1] + sl.f2[1], sl.t1 + sl.t2, sl.t2);
}

}  // namespace melswim

#endif  // MELSWIM_RFT_HPP
