#ifndef MELSWIM_STATE_HPP
#define MELSWIM_STATE_HPP

#include <Eigen/Dense>
#include <cmath>

#include "melswim/common.hpp"

namespace melswim {

/// Instantaneous magnetic field expressed in the body frame of segment 2:
/// h_par along the segment, h_perp normal to it.
struct Control {
  double h_par = 0.0;
  double h_perp = 0.0;
};

/// Configuration z = (x, y, theta, alpha): lab-frame midpoint of segment 2,
/// its heading, and the relative angle of segment 1 with respect to it.
struct State {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double alpha = 0.0;

  static State origin() { return State{}; }

  Eigen::Vector4d vec() const { return Eigen::Vector4d(x, y, theta, alpha); }

  static State from_vec(const Eigen::Vector4d& v) { return State{v[0], v[1], v[2], v[3]}; }

  /// Angles wrapped to (-pi, pi].
  State normalized() const {
    return State{x, y, normalize_angle(theta), normalize_angle(alpha)};
  }
};

/// Symmetry group of the dynamics: (x,y) -> R_thetabar (x+xbar, y+ybar),
/// theta -> theta + thetabar, alpha unchanged.
inline State transform_state(const State& z, double xbar, double ybar, double thetabar) {
  const double c = std::cos(thetabar), s = std::sin(thetabar);
  const double tx = z.x + xbar, ty = z.y + ybar;
  return State{c * tx - s * ty, s * tx + c * ty, normalize_angle(z.theta + thetabar), z.alpha};
}

/// Euclidean distance on the state space with angle differences wrapped, so
/// two states on either side of the branch cut compare as close.
inline double state_distance(const State& a, const State& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  const double dth = normalize_angle(a.theta - b.theta);
  const double dal = normalize_angle(a.alpha - b.alpha);
  return std::sqrt(dx * dx + dy * dy + dth * dth + dal * dal);
}

}  // namespace melswim

#endif  // MELSWIM_STATE_HPP
