#ifndef MELSWIM_INTEGRATE_HPP
#define MELSWIM_INTEGRATE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "melswim/common.hpp"
#include "melswim/model.hpp"
#include "melswim/params.hpp"
#include "melswim/signal.hpp"
#include "melswim/state.hpp"

namespace melswim {

struct IntegrateOptions {
  double dt_max = 1e-3;
  double tol = 1e-7;  // advisory accuracy budget, reported against the Richardson estimate
  bool estimate_error = true;
};

struct StepStats {
  double dt_max = 0.0;
  std::size_t steps = 0;
  double max_error_estimate = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  ControlSignal signal = ControlSignal::zero(1.0);
  StepStats stats;

  const State& initial() const { return states.front(); }
  const State& final_state() const { return states.back(); }
  double duration() const { return times.back(); }
};

namespace detail {

inline Eigen::Vector4d rk4_step(const SwimmerParams& p, const Eigen::Vector4d& z, double t,
                                double h, const ControlSignal& sig, std::size_t seg) {
  const auto f = [&](const Eigen::Vector4d& zz, double tt) {
    return rhs(p, State::from_vec(zz), sig.eval_in_segment(seg, tt));
  };
  const Eigen::Vector4d k1 = f(z, t);
  const Eigen::Vector4d k2 = f(z + 0.5 * h * k1, t + 0.5 * h);
  const Eigen::Vector4d k3 = f(z + 0.5 * h * k2, t + 0.5 * h);
  const Eigen::Vector4d k4 = f(z + h * k3, t + h);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Classical fixed-step RK4 on zdot = F0 + h_par F1 + h_perp F2. Steps are
/// split at every signal breakpoint so the control seen by any single step
/// is smooth (linear in t); within a segment the step is uniform and no
/// larger than dt_max. A half-step Richardson shadow estimates the local
/// error; the estimate is recorded, not used adaptively, so runs are
/// reproducible bit-for-bit given identical inputs.
inline Trajectory integrate(const SwimmerParams& p, const State& z0, const ControlSignal& sig,
                            const IntegrateOptions& opts = {}) {
  if (!(opts.dt_max > 0.0)) throw InvalidParameterError("dt_max must be positive");
  Trajectory traj;
  traj.signal = sig;
  traj.stats.dt_max = opts.dt_max;
  traj.times.push_back(0.0);
  traj.states.push_back(z0.normalized());

  Eigen::Vector4d z = traj.states.back().vec();
  for (std::size_t seg = 0; seg < sig.segment_count(); ++seg) {
    const double t0 = sig.segment_start(seg), t1 = sig.segment_end(seg);
    const double len = t1 - t0;
    const auto n = static_cast<std::size_t>(std::ceil(len / opts.dt_max - 1e-12));
    const std::size_t steps = std::max<std::size_t>(1, n);
    const double h = len / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = t0 + static_cast<double>(k) * h;
      const Eigen::Vector4d z_full = detail::rk4_step(p, z, t, h, sig, seg);
      if (opts.estimate_error) {
        const Eigen::Vector4d z_half =
            detail::rk4_step(p, detail::rk4_step(p, z, t, 0.5 * h, sig, seg), t + 0.5 * h,
                             0.5 * h, sig, seg);
        traj.stats.max_error_estimate =
            std::max(traj.stats.max_error_estimate, (z_full - z_half).norm() / 15.0);
      }
      if (!z_full.allFinite()) throw DivergenceError("state became non-finite", t + h);
      z = z_full;
      State zs = State::from_vec(z).normalized();
      z = zs.vec();
      traj.times.push_back(k + 1 == steps ? t1 : t + h);
      traj.states.push_back(zs);
      ++traj.stats.steps;
    }
  }
  return traj;
}

inline State integrate_endpoint(const SwimmerParams& p, const State& z0, const ControlSignal& sig,
                                const IntegrateOptions& opts = {}) {
  IntegrateOptions fast = opts;
  fast.estimate_error = false;
  return integrate(p, z0, sig, fast).final_state();
}

/// Frame change applied to every sample; controls and alpha are untouched.
inline Trajectory transform_trajectory(const Trajectory& traj, double xbar, double ybar,
                                       double thetabar) {
  Trajectory out = traj;
  for (auto& s : out.states) s = transform_state(s, xbar, ybar, thetabar);
  return out;
}

/// State at an off-sample time by cubic Hermite interpolation on the
/// bracketing sample interval, with endpoint derivatives from the dynamics
/// evaluated segment-locally (so control jumps at breakpoints do not bleed
/// across). Exact at sample times.
inline State interpolate_state(const SwimmerParams& p, const Trajectory& traj, double t) {
  const auto& ts = traj.times;
  if (t <= ts.front()) return traj.states.front();
  if (t >= ts.back()) return traj.states.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t i = static_cast<std::size_t>(it - ts.begin()) - 1;
  i = std::min(i, ts.size() - 2);
  if (t == ts[i]) return traj.states[i];
  const double t0 = ts[i], t1 = ts[i + 1], h = t1 - t0;
  const double u = (t - t0) / h;
  const std::size_t seg = traj.signal.segment_index_of(0.5 * (t0 + t1));
  const Eigen::Vector4d z0 = traj.states[i].vec();
  const Eigen::Vector4d z1 = traj.states[i + 1].vec();
  const Eigen::Vector4d d0 = rhs(p, traj.states[i], traj.signal.eval_in_segment(seg, t0));
  const Eigen::Vector4d d1 = rhs(p, traj.states[i + 1], traj.signal.eval_in_segment(seg, t1));
  const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
  const double h10 = u * (1.0 - u) * (1.0 - u);
  const double h01 = u * u * (3.0 - 2.0 * u);
  const double h11 = u * u * (u - 1.0);
  return State::from_vec(h00 * z0 + h10 * h * d0 + h01 * z1 + h11 * h * d1);
}

struct ConvergenceReport {
  double errors[3] = {0.0, 0.0, 0.0};  // endpoint error at dt, dt/2, dt/4 vs dt/64
  double order = 0.0;
  bool exact = false;  // all errors at floating-point zero (e.g. an equilibrium run)
};

/// Self-convergence measurement: endpoint errors at dt, dt/2, dt/4 against a
/// dt/64 reference; the order is the mean log2 ratio of successive errors.
inline ConvergenceReport convergence_order(const SwimmerParams& p, const State& z0,
                                           const ControlSignal& sig, double base_dt = 0.02) {
  IntegrateOptions o;
  o.estimate_error = false;
  const auto endpoint = [&](double dt) {
    o.dt_max = dt;
    return integrate(p, z0, sig, o).final_state().vec();
  };
  const Eigen::Vector4d ref = endpoint(base_dt / 64.0);
  ConvergenceReport r;
  for (int k = 0; k < 3; ++k) r.errors[k] = (endpoint(base_dt / (1 << k)) - ref).norm();
  if (r.errors[0] == 0.0 && r.errors[1] == 0.0 && r.errors[2] == 0.0) {
    r.exact = true;
    r.order = 4.0;
    return r;
  }
  double sum = 0.0;
  int cnt = 0;
  for (int k = 0; k < 2; ++k) {
    if (r.errors[k] > 0.0 && r.errors[k + 1] > 0.0) {
      sum += std::log2(r.errors[k] / r.errors[k + 1]);
      ++cnt;
    }
  }
  r.order = cnt > 0 ? sum / cnt : 0.0;
  return r;
}

}  // namespace melswim

#endif  // MELSWIM_INTEGRATE_HPP
