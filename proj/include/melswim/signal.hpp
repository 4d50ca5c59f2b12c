#ifndef MELSWIM_SIGNAL_HPP
#define MELSWIM_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "melswim/common.hpp"
#include "melswim/state.hpp"

namespace melswim {

/// Time-parameterized control law on [0, T]. Internally every signal is a
/// list of segments carrying (left, right) endpoint values with linear
/// interpolation in between; piecewise-constant and sampled-linear signals
/// are the two special cases the constructors produce, and "segments" is
/// their closure under concatenation and pointwise addition (needed for
/// synthesized loop controls, which mix a continuous feedback term with a
/// mirrored input that may jump).
class ControlSignal {
 public:
  enum class Kind { PiecewiseConstant, SampledLinear, Segments };

  static ControlSignal piecewise_constant(std::vector<double> breakpoints,
                                          std::vector<Control> values) {
    check_breakpoints(breakpoints);
    if (values.size() + 1 != breakpoints.size())
      throw InvalidParameterError("piecewise-constant signal needs one value per interval");
    ControlSignal s;
    s.kind_ = Kind::PiecewiseConstant;
    s.times_ = std::move(breakpoints);
    s.left_ = values;
    s.right_ = std::move(values);
    return s;
  }

  static ControlSignal sampled_linear(std::vector<double> breakpoints,
                                      std::vector<Control> samples) {
    check_breakpoints(breakpoints);
    if (samples.size() != breakpoints.size())
      throw InvalidParameterError("sampled-linear signal needs one value per breakpoint");
    ControlSignal s;
    s.kind_ = Kind::SampledLinear;
    s.times_ = std::move(breakpoints);
    s.left_.assign(samples.begin(), samples.end() - 1);
    s.right_.assign(samples.begin() + 1, samples.end());
    return s;
  }

  static ControlSignal segments(std::vector<double> breakpoints, std::vector<Control> left,
                                std::vector<Control> right) {
    check_breakpoints(breakpoints);
    if (left.size() + 1 != breakpoints.size() || right.size() != left.size())
      throw InvalidParameterError("segment signal needs left/right values per interval");
    ControlSignal s;
    s.kind_ = Kind::Segments;
    s.times_ = std::move(breakpoints);
    s.left_ = std::move(left);
    s.right_ = std::move(right);
    return s;
  }

  static ControlSignal constant(const Control& u, double duration) {
    return piecewise_constant({0.0, duration}, {u});
  }

  static ControlSignal zero(double duration) { return constant(Control{0.0, 0.0}, duration); }

  Kind kind() const { return kind_; }
  double duration() const { return times_.back(); }
  const std::vector<double>& breakpoints() const { return times_; }
  std::size_t segment_count() const { return left_.size(); }
  double segment_start(std::size_t i) const { return times_[i]; }
  double segment_end(std::size_t i) const { return times_[i + 1]; }
  const Control& segment_left(std::size_t i) const { return left_[i]; }
  const Control& segment_right(std::size_t i) const { return right_[i]; }

  /// Value inside segment i at absolute time t, clamped to the segment.
  /// At t == segment_end(i) this is the left-limit, which is what an
  /// integrator stepping across segment i must see.
  Control eval_in_segment(std::size_t i, double t) const {
    const double t0 = times_[i], t1 = times_[i + 1];
    double lam = (t - t0) / (t1 - t0);
    lam = std::clamp(lam, 0.0, 1.0);
    return Control{left_[i].h_par + lam * (right_[i].h_par - left_[i].h_par),
                   left_[i].h_perp + lam * (right_[i].h_perp - left_[i].h_perp)};
  }

  /// Total on [0, T], clamped outside; right-continuous at interior
  /// breakpoints, left value at T.
  Control eval(double t) const {
    if (t <= times_.front()) return eval_in_segment(0, times_.front());
    if (t >= times_.back()) return eval_in_segment(left_.size() - 1, times_.back());
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    return eval_in_segment(std::min(i, left_.size() - 1), t);
  }

  /// Componentwise sup norms; exact for piecewise-linear values since the
  /// extrema sit at segment endpoints.
  Control sup_norms() const {
    Control m{0.0, 0.0};
    for (std::size_t i = 0; i < left_.size(); ++i) {
      m.h_par = std::max({m.h_par, std::abs(left_[i].h_par), std::abs(right_[i].h_par)});
      m.h_perp = std::max({m.h_perp, std::abs(left_[i].h_perp), std::abs(right_[i].h_perp)});
    }
    return m;
  }

  /// Time-reversed signal on the same interval: value at t becomes the value
  /// at T - t. Left/right limits swap roles at every jump.
  ControlSignal reversed() const {
    const double T = duration();
    ControlSignal s;
    s.kind_ = kind_ == Kind::PiecewiseConstant ? Kind::PiecewiseConstant : kind_;
    const std::size_t n = left_.size();
    s.times_.resize(n + 1);
    s.left_.resize(n);
    s.right_.resize(n);
    for (std::size_t i = 0; i <= n; ++i) s.times_[i] = T - times_[n - i];
    s.times_.front() = 0.0;
    s.times_.back() = T;
    for (std::size_t i = 0; i < n; ++i) {
      s.left_[i] = right_[n - 1 - i];
      s.right_[i] = left_[n - 1 - i];
    }
    return s;
  }

  /// b appended after a, with b's time axis shifted by a's duration.
  static ControlSignal concatenated(const ControlSignal& a, const ControlSignal& b) {
    ControlSignal s;
    const bool pc = a.kind_ == Kind::PiecewiseConstant && b.kind_ == Kind::PiecewiseConstant;
    const bool seam_continuous = a.right_.back().h_par == b.left_.front().h_par &&
                                 a.right_.back().h_perp == b.left_.front().h_perp;
    const bool sl =
        a.kind_ == Kind::SampledLinear && b.kind_ == Kind::SampledLinear && seam_continuous;
    s.kind_ = pc ? Kind::PiecewiseConstant : (sl ? Kind::SampledLinear : Kind::Segments);
    s.times_ = a.times_;
    for (std::size_t i = 1; i < b.times_.size(); ++i)
      s.times_.push_back(a.duration() + b.times_[i]);
    s.left_ = a.left_;
    s.left_.insert(s.left_.end(), b.left_.begin(), b.left_.end());
    s.right_ = a.right_;
    s.right_.insert(s.right_.end(), b.right_.begin(), b.right_.end());
    return s;
  }

  /// Pointwise sum of this signal and a piecewise-constant perturbation
  /// given by its own breakpoints/values; the grids are merged exactly.
  ControlSignal with_added_piecewise(const std::vector<double>& times,
                                     const std::vector<Control>& values) const {
    const ControlSignal other = piecewise_constant(times, values);
    if (std::abs(other.duration() - duration()) > 0.0)
      throw InvalidParameterError("perturbation must cover the same [0, T]");
    std::vector<double> merged;
    merged.reserve(times_.size() + times.size());
    std::merge(times_.begin(), times_.end(), times.begin(), times.end(),
               std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    ControlSignal s;
    s.kind_ = kind_ == Kind::PiecewiseConstant ? Kind::PiecewiseConstant : Kind::Segments;
    s.times_ = merged;
    const std::size_t n = merged.size() - 1;
    s.left_.resize(n);
    s.right_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t0 = merged[i], t1 = merged[i + 1];
      const std::size_t ia = segment_index_of(t0);
      const std::size_t ib = other.segment_index_of(t0);
      const Control la = eval_in_segment(ia, t0);
      const Control ra = eval_in_segment(ia, t1);
      const Control d = other.left_[ib];
      s.left_[i] = Control{la.h_par + d.h_par, la.h_perp + d.h_perp};
      s.right_[i] = Control{ra.h_par + d.h_par, ra.h_perp + d.h_perp};
    }
    return s;
  }

  /// Index of the segment whose half-open [start, end) interval contains t
  /// (the last segment for t == T).
  std::size_t segment_index_of(double t) const {
    if (t <= times_.front()) return 0;
    if (t >= times_.back()) return left_.size() - 1;
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return std::min(static_cast<std::size_t>(it - times_.begin()) - 1, left_.size() - 1);
  }

 private:
  static void check_breakpoints(const std::vector<double>& t) {
    if (t.size() < 2) throw InvalidParameterError("signal needs at least two breakpoints");
    if (t.front() != 0.0) throw InvalidParameterError("signal must start at t = 0");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1]))
        throw InvalidParameterError("signal breakpoints must be strictly ascending");
    if (!std::isfinite(t.back())) throw InvalidParameterError("signal duration must be finite");
  }

  Kind kind_ = Kind::PiecewiseConstant;
  std::vector<double> times_;
  std::vector<Control> left_, right_;
};

}  // namespace melswim

#endif  // MELSWIM_SIGNAL_HPP
