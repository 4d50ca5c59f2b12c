#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "melswim/brackets.hpp"
#include "melswim/mobility.hpp"

#include "test_util.hpp"

using namespace melswim;

namespace {
const SwimmerParams kP0 = SwimmerParams::canonical();
}

TEST(Brackets, BracketIsAntisymmetric) {
  auto gen = testutil::rng(41);
  const State z = testutil::random_state(gen, 0.5, 0.8);
  const Eigen::Vector4d ab = eval_expr(kP0, make_bracket(expr::x3(), expr::x4()), z);
  const Eigen::Vector4d ba = eval_expr(kP0, make_bracket(expr::x4(), expr::x3()), z);
  EXPECT_LT((ab + ba).norm(), 1e-8 * std::max(1.0, ab.norm()));
}

TEST(Brackets, IteratedSpellingMatchesExplicitNesting) {
  auto gen = testutil::rng(42);
  const State z = testutil::random_state(gen, 0.5, 0.8);
  const Eigen::Vector4d a = eval_expr(kP0, expr::iterated({1, 0, 2}), z);
  const Eigen::Vector4d b = eval_expr(
      kP0, make_bracket(expr::f1(), make_bracket(expr::f0(), expr::f2())), z);
  EXPECT_LT((a - b).norm(), 1e-12 * std::max(1.0, a.norm()));
}

TEST(Brackets, CanonicalLarcCertificate) {
  const LarcResult r = larc_certificate(kP0);
  EXPECT_EQ(r.rank, 4);
  EXPECT_NEAR(r.sigma_min, 1.322, 3e-3);
  EXPECT_NEAR(r.det_with_x334, 34.171875, 1e-4);
  EXPECT_TRUE(r.det334_nonzero);
  EXPECT_FALSE(r.det434_nonzero);
  EXPECT_LT(std::abs(r.det_with_x434), 1e-6 * std::abs(r.det_with_x334));
  EXPECT_FALSE(r.suspect_numerical);
}

TEST(Brackets, LarcHoldsOnRandomAdmissibleSets) {
  auto gen = testutil::rng(43);
  for (int k = 0; k < 10; ++k) {
    const LarcResult r = larc_certificate(testutil::random_params(gen));
    EXPECT_EQ(r.rank, 4) << "draw " << k;
  }
}

TEST(Brackets, LarcDropsUnderIsotropicDrag) {
  SwimmerParams p = kP0;
  p.eta1 = p.xi1;
  p.eta2 = p.xi2;
  EXPECT_LT(larc_certificate(p).rank, 4);
}

TEST(Brackets, CanonicalBadBracket) {
  const BadBracketResult r = bad_bracket_test(kP0);
  EXPECT_FALSE(r.in_span_x3_x4);
  EXPECT_NEAR(r.x34_coefficient, 36.0, 1e-4);
  EXPECT_NEAR(r.x434_coefficient, 0.0, 1e-6);
  EXPECT_LT(r.decomposition_residual, 1e-6);
  EXPECT_LT(r.f101_norm, 1e-10);
  EXPECT_NEAR(r.f202_norm, 81.0, 1e-3);
}

TEST(Brackets, OppositeMomentsPutTheBadBracketInSpan) {
  SwimmerParams p = kP0;
  p.m1 = 1.5;
  p.m2 = -1.5;
  const BadBracketResult r = bad_bracket_test(p);
  EXPECT_TRUE(r.in_span_x3_x4);
}

TEST(Brackets, StructureConstantRecoveredTwoWays) {
  const LRecovery r = recover_l(kP0);
  EXPECT_TRUE(r.consistent);
  EXPECT_NEAR(r.from_f12, 6.0, 1e-6);
  EXPECT_NEAR(r.from_f02, 6.0, 1e-6);
  auto gen = testutil::rng(44);
  for (int k = 0; k < 10; ++k) {
    const LRecovery rr = recover_l(testutil::random_params(gen));
    EXPECT_TRUE(rr.consistent) << "draw " << k;
  }
}

TEST(Brackets, OrderThreeDeterminantScan) {
  std::vector<double> grid;
  for (int k = -40; k <= 40; ++k) grid.push_back(0.01 * k);
  const X5Scan scan = x5_beta_rank(kP0, 0.01, grid);
  EXPECT_FALSE(scan.degenerate);
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid[k] != 0.0) EXPECT_TRUE(scan.nonzero[k]) << "alpha " << grid[k];
  // frozen midpoint value and even symmetry of the determinant in alpha
  const auto at = [&](double a) {
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (std::abs(grid[k] - a) < 1e-12) return scan.dets[k];
    ADD_FAILURE() << "grid point missing";
    return 0.0;
  };
  EXPECT_NEAR(at(0.0), -1.025156, 2e-4);
  // Even in alpha; the FD noise floor for a nested bracket sits near 1e-8.
  for (double a : {0.1, 0.25, 0.4}) EXPECT_NEAR(at(a), at(-a), 5e-8);
}

TEST(Brackets, OrderThreeDeterminantIgnoresPlacement) {
  auto gen = testutil::rng(45);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  const double ref = x5_det(kP0, 1e-3, State{0.0, 0.0, 0.0, 0.2});
  for (int k = 0; k < 5; ++k) {
    const double v = x5_det(kP0, 1e-3, State{d(gen), d(gen), d(gen), 0.2});
    EXPECT_NEAR(v, ref, 1e-10 * std::max(1.0, std::abs(ref))) << "draw " << k;
  }
}

TEST(Brackets, CompositeJacobianMatchesRawDifferences) {
  // The evaluator differences composite nodes in the origin frame and
  // conjugates back; raw central differences taken directly at a displaced
  // state must agree to FD accuracy or the frame reduction is wrong.
  const Expr e34 = make_bracket(expr::x3(), expr::x4());
  const State z{0.7, -1.3, 0.9, 0.25};
  const Eigen::Matrix4d j = jacobian_expr(kP0, e34, z);
  const double h = 1e-5;
  Eigen::Matrix4d raw;
  for (int i = 0; i < 4; ++i) {
    State zp = z, zm = z;
    auto bump = [&](State& s, double dv) {
      if (i == 0) s.x += dv;
      if (i == 1) s.y += dv;
      if (i == 2) s.theta += dv;
      if (i == 3) s.alpha += dv;
    };
    bump(zp, h);
    bump(zm, -h);
    raw.col(i) = (eval_expr(kP0, e34, zp) - eval_expr(kP0, e34, zm)) / (2.0 * h);
  }
  EXPECT_LT((j - raw).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Brackets, InputDerivativeColumnsMatchOrderOne) {
  // With j = 0 the columns are the bare input fields.
  const State z{0.0, 0.0, 0.0, 0.15};
  const auto cols = bj_fields(kP0, 0.02, z, 0);
  const Eigen::Vector4d f1 = eval_expr(kP0, expr::f1(), z);
  const Eigen::Vector4d f2 = eval_expr(kP0, expr::f2(), z);
  EXPECT_LT((cols.col(0) - f1).norm(), 1e-12);
  EXPECT_LT((cols.col(1) - f2).norm(), 1e-12);
}
