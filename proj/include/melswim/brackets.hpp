#ifndef MELSWIM_BRACKETS_HPP
#define MELSWIM_BRACKETS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "melswim/common.hpp"
#include "melswim/linearize.hpp"
#include "melswim/mobility.hpp"
#include "melswim/model.hpp"
#include "melswim/params.hpp"
#include "melswim/state.hpp"

namespace melswim {

struct BracketExpr;
using Expr = std::shared_ptr<const BracketExpr>;

/// Tree over the field leaves with binary bracket nodes. delta_i counts the
/// F_i leaves; rho(theta) = theta*delta0 + delta1 + delta2 is the weighted
/// order used to classify bad brackets.
struct BracketExpr {
  bool is_leaf = true;
  Field leaf = Field::F0;
  Expr lhs, rhs;
  int delta0 = 0, delta1 = 0, delta2 = 0;
  int height = 0;

  double rho(double theta) const { return theta * delta0 + delta1 + delta2; }
};

inline Expr make_leaf(Field f) {
  auto e = std::make_shared<BracketExpr>();
  e->is_leaf = true;
  e->leaf = f;
  e->delta0 = f == Field::F0 ? 1 : 0;
  e->delta1 = f == Field::F1 ? 1 : 0;
  e->delta2 = f == Field::F2 ? 1 : 0;
  e->height = 0;
  return e;
}

inline Expr make_bracket(Expr f, Expr g) {
  auto e = std::make_shared<BracketExpr>();
  e->is_leaf = false;
  e->lhs = std::move(f);
  e->rhs = std::move(g);
  e->delta0 = e->lhs->delta0 + e->rhs->delta0;
  e->delta1 = e->lhs->delta1 + e->rhs->delta1;
  e->delta2 = e->lhs->delta2 + e->rhs->delta2;
  e->height = 1 + std::max(e->lhs->height, e->rhs->height);
  return e;
}

/// Finite-difference policy for Jacobians of composite bracket fields.
/// Leaves always use the analytic Jacobian. Each extra nesting level of
/// FD-of-FD amplifies noise, so deep checks scale the step with the node
/// height; the default keeps a flat step. Richardson extrapolation
/// (combining steps h and 2h) removes the leading truncation term, which is
/// what keeps degenerate-parameter rank drops resolvable against the 1e-9
/// singular-value cutoff.
struct StepPolicy {
  double base = tol::bracket_fd_step;
  double growth = 1.0;
  double cap = 1e-3;
  bool richardson = true;

  double step_for_height(int height) const {
    double h = base;
    for (int k = 1; k < height; ++k) h *= growth;
    return std::min(h, cap);
  }
};

inline Eigen::Matrix4d jacobian_expr(const SwimmerParams& p, const Expr& e, const State& z,
                                     const StepPolicy& policy = {});

inline Eigen::Vector4d eval_expr(const SwimmerParams& p, const Expr& e, const State& z,
                                 const StepPolicy& policy = {}) {
  if (e->is_leaf) return field_value(p, e->leaf, z);
  return jacobian_expr(p, e->rhs, z, policy) * eval_expr(p, e->lhs, z, policy) -
         jacobian_expr(p, e->lhs, z, policy) * eval_expr(p, e->rhs, z, policy);
}

inline Eigen::Matrix4d jacobian_expr(const SwimmerParams& p, const Expr& e, const State& z,
                                     const StepPolicy& policy) {
  if (e->is_leaf) return jacobian_field(p, e->leaf, z);
  if (z.x != 0.0 || z.y != 0.0 || z.theta != 0.0) {
    // Every field here pushes forward under planar motions, so a composite
    // Jacobian conjugates by blkdiag(R(theta), I) when the state is moved to
    // the origin frame. Differencing at the origin frame keeps the result
    // placement-independent to roundoff instead of to the FD noise floor.
    const State zc{0.0, 0.0, 0.0, z.alpha};
    const Eigen::Matrix4d j0 = jacobian_expr(p, e, zc, policy);
    const double c = std::cos(z.theta);
    const double s = std::sin(z.theta);
    Eigen::Matrix4d dg = Eigen::Matrix4d::Identity();
    dg(0, 0) = c;
    dg(0, 1) = -s;
    dg(1, 0) = s;
    dg(1, 1) = c;
    Eigen::Matrix4d dgi = Eigen::Matrix4d::Identity();
    dgi(0, 0) = c;
    dgi(0, 1) = s;
    dgi(1, 0) = -s;
    dgi(1, 1) = c;
    return dg * j0 * dgi;
  }
  const auto f = [&](const State& zz) { return eval_expr(p, e, zz, policy); };
  const double h = policy.step_for_height(e->height);
  const Eigen::Matrix4d jh = jacobian_fd(f, z, h);
  if (!policy.richardson) return jh;
  const Eigen::Matrix4d j2h = jacobian_fd(f, z, 2.0 * h);
  return (4.0 * jh - j2h) / 3.0;
}

/// [f, g](z) = Dg(z) f(z) - Df(z) g(z).
inline Eigen::Vector4d lie_bracket(const SwimmerParams& p, const Expr& f, const Expr& g,
                                   const State& z, const StepPolicy& policy = {}) {
  return eval_expr(p, make_bracket(f, g), z, policy);
}

namespace expr {

inline Expr f0() { return make_leaf(Field::F0); }
inline Expr f1() { return make_leaf(Field::F1); }
inline Expr f2() { return make_leaf(Field::F2); }
inline Expr x3() { return make_leaf(Field::X3); }
inline Expr x4() { return make_leaf(Field::X4); }
inline Expr x34() { return make_bracket(x3(), x4()); }
inline Expr x334() { return make_bracket(x3(), x34()); }
inline Expr x434() { return make_bracket(x4(), x34()); }

/// Right-nested iterated bracket from drift/control indices, e.g.
/// {1, 0, 1} -> [F1, [F0, F1]].
inline Expr iterated(std::initializer_list<int> indices) {
  const auto leaf_of = [](int i) {
    return make_leaf(i == 0 ? Field::F0 : (i == 1 ? Field::F1 : Field::F2));
  };
  auto it = std::rbegin(indices);
  Expr e = leaf_of(*it);
  for (++it; it != std::rend(indices); ++it) e = make_bracket(leaf_of(*it), e);
  return e;
}

inline Expr f12() { return iterated({1, 2}); }
inline Expr f02() { return iterated({0, 2}); }
inline Expr f101() { return iterated({1, 0, 1}); }
inline Expr f202() { return iterated({2, 0, 2}); }
inline Expr f212() { return iterated({2, 1, 2}); }

}  // namespace expr

/// The bracket-structure constant tying [F1, F2] to X3 and [F0, F2] to X4 at
/// the straight state, recovered through both projections; the recoveries
/// must agree or the field transcription is inconsistent.
struct LRecovery {
  double from_f12 = 0.0;
  double from_f02 = 0.0;
  bool consistent = false;
};

inline LRecovery recover_l(const SwimmerParams& p, const StepPolicy& policy = {}) {
  const State o = State::origin();
  const MobilityDecomposition m = e_matrix(p, 0.0);
  const Eigen::Vector4d f12v = eval_expr(p, expr::f12(), o, policy);
  const Eigen::Vector4d f02v = eval_expr(p, expr::f02(), o, policy);
  LRecovery r;
  r.from_f12 = f12v.dot(m.x3) / (p.m1 * m.x3.squaredNorm());
  r.from_f02 = -f02v.dot(m.x4) / (p.kappa * m.x4.squaredNorm());
  const double scale = std::max({std::abs(r.from_f12), std::abs(r.from_f02), 1e-12});
  r.consistent = std::abs(r.from_f12 - r.from_f02) <= 1e-8 * scale;
  return r;
}

struct LarcResult {
  int rank = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double det_with_x334 = 0.0;
  double det_with_x434 = 0.0;
  bool det334_nonzero = false;
  bool det434_nonzero = false;
  // rank < 4 with Assumption 1 satisfied means a numerical failure, not a
  // structural one; flagged instead of thrown so sweeps can record it.
  bool suspect_numerical = false;
};

/// Rank of {X3, X4, [X3,X4], [X3,[X3,X4]], [X4,[X3,X4]]} at the straight
/// state, plus the two 4-column determinants of which at least one must be
/// nonzero for admissible parameters.
inline LarcResult larc_certificate(const SwimmerParams& p, const StepPolicy& policy = {}) {
  const State o = State::origin();
  Eigen::Matrix<double, 4, 5> m;
  m.col(0) = eval_expr(p, expr::x3(), o, policy);
  m.col(1) = eval_expr(p, expr::x4(), o, policy);
  m.col(2) = eval_expr(p, expr::x34(), o, policy);
  m.col(3) = eval_expr(p, expr::x334(), o, policy);
  m.col(4) = eval_expr(p, expr::x434(), o, policy);

  LarcResult r;
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 5>> svd(m);
  r.sigma_max = svd.singularValues()[0];
  r.sigma_min = svd.singularValues()[3];
  const double cutoff = tol::rank_rel * r.sigma_max;
  for (int k = 0; k < 4; ++k)
    if (svd.singularValues()[k] > cutoff) ++r.rank;

  Eigen::Matrix4d d;
  d.col(0) = m.col(0);
  d.col(1) = m.col(1);
  d.col(2) = m.col(2);
  d.col(3) = m.col(3);
  r.det_with_x334 = d.determinant();
  const double scale334 = m.col(0).norm() * m.col(1).norm() * m.col(2).norm() * m.col(3).norm();
  d.col(3) = m.col(4);
  r.det_with_x434 = d.determinant();
  const double scale434 = m.col(0).norm() * m.col(1).norm() * m.col(2).norm() * m.col(4).norm();
  r.det334_nonzero = std::abs(r.det_with_x334) > tol::rank_rel * std::max(scale334, 1e-30);
  r.det434_nonzero = std::abs(r.det_with_x434) > tol::rank_rel * std::max(scale434, 1e-30);
  r.suspect_numerical = r.rank < 4 && validate_params(p).assumption1_holds;
  return r;
}

struct BadBracketResult {
  bool in_span_x3_x4 = false;
  double x34_coefficient = 0.0;
  double x434_coefficient = 0.0;
  Eigen::Vector4d coefficients = Eigen::Vector4d::Zero();  // on (X3, X4, X34, X434)
  double decomposition_residual = 0.0;                     // relative
  double f101_norm = 0.0;
  double f202_norm = 0.0;
};

/// Decomposes the bad bracket [F2, [F0, F2]] at the straight state over the
/// basis (X3, X4, X34, X434) and reports whether it degenerates into
/// span{X3, X4} (it does exactly when M1 + M2 = 0). Also evaluates
/// [F1, [F0, F1]], which must vanish.
inline BadBracketResult bad_bracket_test(const SwimmerParams& p, const StepPolicy& policy = {}) {
  const State o = State::origin();
  Eigen::Matrix4d basis;
  basis.col(0) = eval_expr(p, expr::x3(), o, policy);
  basis.col(1) = eval_expr(p, expr::x4(), o, policy);
  basis.col(2) = eval_expr(p, expr::x34(), o, policy);
  basis.col(3) = eval_expr(p, expr::x434(), o, policy);
  const Eigen::Vector4d f202v = eval_expr(p, expr::f202(), o, policy);

  BadBracketResult r;
  r.f202_norm = f202v.norm();
  r.f101_norm = eval_expr(p, expr::f101(), o, policy).norm();
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(basis, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r.coefficients = svd.solve(f202v);
  // When the moments cancel the bracket vanishes outright, so its own norm
  // is just FD noise; measure smallness against the basis columns instead.
  const double scale = std::max(r.f202_norm, basis.colwise().norm().maxCoeff());
  r.decomposition_residual = (basis * r.coefficients - f202v).norm() / std::max(scale, 1e-30);
  if (r.decomposition_residual > 1e-6)
    throw ConsistencyError("bad-bracket basis (X3, X4, X34, X434) is numerically degenerate");
  r.x34_coefficient = r.coefficients[2];
  r.x434_coefficient = r.coefficients[3];
  const Eigen::Vector4d outside =
      r.coefficients[2] * basis.col(2) + r.coefficients[3] * basis.col(3);
  r.in_span_x3_x4 = outside.norm() <= 1e-8 * scale;
  return r;
}

enum class BjDrift { WithF2, WithF1 };

/// Columns C1_j, C2_j of the input-matrix derivatives along the
/// constant-control reference: C_i^0 = F_i and C_i^{j} = [drift, C_i^{j-1}]
/// with drift = F0 + beta*F_d. The reference control is H_perp = beta, so
/// the matching drift uses F2; the F1 variant is kept selectable because the
/// two readings differ only in that index.
inline Eigen::Matrix<double, 4, 2> bj_fields(const SwimmerParams& p, double beta, const State& z,
                                             int j, BjDrift drift = BjDrift::WithF2,
                                             const StepPolicy& policy = {}) {
  if (j < 0 || j > 2) throw InvalidParameterError("bj_fields supports j in {0, 1, 2}");
  const Expr fd = drift == BjDrift::WithF2 ? expr::f2() : expr::f1();
  Eigen::Matrix<double, 4, 2> out;
  for (int i = 0; i < 2; ++i) {
    using Term = std::pair<double, Expr>;
    std::vector<Term> terms{{1.0, i == 0 ? expr::f1() : expr::f2()}};
    for (int level = 0; level < j; ++level) {
      std::vector<Term> next;
      next.reserve(2 * terms.size());
      for (const auto& [w, e] : terms) {
        next.emplace_back(w, make_bracket(expr::f0(), e));
        next.emplace_back(w * beta, make_bracket(fd, e));
      }
      terms = std::move(next);
    }
    Eigen::Vector4d v = Eigen::Vector4d::Zero();
    for (const auto& [w, e] : terms) v += w * eval_expr(p, e, z, policy);
    out.col(i) = v;
  }
  return out;
}

/// The order-three direction certifying rank 4 near the straight state:
/// X5 = a(alpha) [X3,[X3,X4]] + b(alpha) [X4,[X3,X4]] with (a, b) the
/// X3/X4 coordinates of the constant-control drift F0 + beta*F2.
inline Eigen::Vector4d x5_beta(const SwimmerParams& p, double beta, const State& z,
                               const StepPolicy& policy = {}) {
  const double a = -beta * (p.m2 + p.m1 * std::cos(z.alpha));
  const double b = -p.kappa * z.alpha - beta * p.m2;
  return a * eval_expr(p, expr::x334(), z, policy) + b * eval_expr(p, expr::x434(), z, policy);
}

/// det(X3, X4, [X3,X4], X5^beta) at z; invariant under (x, y, theta) since a
/// common rotation multiplies every column and has unit determinant.
inline double x5_det(const SwimmerParams& p, double beta, const State& z,
                     const StepPolicy& policy = {}) {
  Eigen::Matrix4d m;
  m.col(0) = eval_expr(p, expr::x3(), z, policy);
  m.col(1) = eval_expr(p, expr::x4(), z, policy);
  m.col(2) = eval_expr(p, expr::x34(), z, policy);
  m.col(3) = x5_beta(p, beta, z, policy);
  return m.determinant();
}

struct X5Scan {
  std::vector<double> alphas;
  std::vector<double> dets;
  std::vector<bool> nonzero;
  double alpha_bar = 0.0;  // largest symmetric punctured interval certified
  bool degenerate = false;
};

inline X5Scan x5_beta_rank(const SwimmerParams& p, double beta,
                           const std::vector<double>& alpha_grid,
                           const StepPolicy& policy = {}) {
  X5Scan scan;
  scan.alphas = alpha_grid;
  scan.dets.reserve(alpha_grid.size());
  scan.nonzero.reserve(alpha_grid.size());
  for (const double alpha : alpha_grid) {
    const State z{0.0, 0.0, 0.0, alpha};
    Eigen::Matrix4d m;
    m.col(0) = eval_expr(p, expr::x3(), z, policy);
    m.col(1) = eval_expr(p, expr::x4(), z, policy);
    m.col(2) = eval_expr(p, expr::x34(), z, policy);
    m.col(3) = x5_beta(p, beta, z, policy);
    const double det = m.determinant();
    const double scale =
        m.col(0).norm() * m.col(1).norm() * m.col(2).norm() * std::max(m.col(3).norm(), 1e-30);
    scan.dets.push_back(det);
    scan.nonzero.push_back(std::abs(det) > tol::rank_rel * scale);
  }

  double bar = 0.0;
  bool any_nonzero = false;
  double first_zero = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    if (alpha_grid[k] == 0.0) continue;
    any_nonzero = any_nonzero || scan.nonzero[k];
    bar = std::max(bar, std::abs(alpha_grid[k]));
    if (!scan.nonzero[k]) first_zero = std::min(first_zero, std::abs(alpha_grid[k]));
  }
  scan.degenerate = !any_nonzero;
  scan.alpha_bar = std::isfinite(first_zero) ? first_zero : bar;
  if (scan.degenerate) scan.alpha_bar = 0.0;
  return scan;
}

}  // namespace melswim

#endif  // MELSWIM_BRACKETS_HPP
