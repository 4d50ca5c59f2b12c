#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "melswim/integrate.hpp"
#include "melswim/model.hpp"
#include "melswim/rft.hpp"
#include "melswim/signal.hpp"
#include "melswim/state.hpp"

#include "test_util.hpp"

using namespace melswim;

TEST(Model, TwoRhsRoutesAgree) {
  auto gen = testutil::rng(31);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    const SwimmerParams p = testutil::random_params(gen);
    const State z = testutil::random_state(gen);
    const Control u{ud(gen), ud(gen)};
    EXPECT_NO_THROW(rhs_checked(p, z, u)) << "draw " << k;
  }
}

TEST(Model, FieldDecompositionIsAffineInControls) {
  auto gen = testutil::rng(32);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const SwimmerParams p = testutil::random_params(gen);
    const State z = testutil::random_state(gen);
    const Control u{ud(gen), ud(gen)};
    const VectorFields f = vector_fields(p, z);
    const Eigen::Vector4d combo = f.f0 + u.h_par * f.f1 + u.h_perp * f.f2;
    const Eigen::Vector4d direct = rhs(p, z, u);
    EXPECT_LT((combo - direct).norm(), tol::algebraic_rel * std::max(direct.norm(), 1.0));
  }
}

TEST(Model, DriftVanishesOnlyOnStraightSet) {
  const SwimmerParams p = SwimmerParams::canonical();
  const RotatingFields f0 = fields_rotating(p, 0.0);
  EXPECT_LT(f0.f0.norm(), 1e-14);
  const RotatingFields fb = fields_rotating(p, 0.3);
  EXPECT_GT(fb.f0.norm(), 1e-3);
  // restoring sign: the drift pushes alpha back toward zero
  EXPECT_LT(fb.f0[3] * 0.3, 0.0);
  const RotatingFields fn = fields_rotating(p, -0.3);
  EXPECT_GT(fn.f0[3], 0.0);
}

TEST(Model, Equivariance) {
  // The dynamics commute with planar rotations and translations: the fields
  // at a transformed state are the transformed fields.
  auto gen = testutil::rng(33);
  std::uniform_real_distribution<double> sh(-2.0, 2.0);
  std::uniform_real_distribution<double> an(-3.0, 3.0);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const SwimmerParams p = testutil::random_params(gen);
    const State z = testutil::random_state(gen);
    const Control u{ud(gen), ud(gen)};
    const double xb = sh(gen), yb = sh(gen), tb = an(gen);
    const State gz = transform_state(z, xb, yb, tb);
    const Eigen::Vector4d v = rhs(p, z, u);
    const double c = std::cos(tb), s = std::sin(tb);
    const Eigen::Vector4d gv(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2], v[3]);
    const Eigen::Vector4d vg = rhs(p, gz, u);
    EXPECT_LT((vg - gv).norm(), 1e-9 * std::max(1.0, gv.norm())) << "draw " << k;
  }
}

TEST(Model, IsotropicDragConservesTheWeightedCentroid) {
  SwimmerParams p;
  p.eta1 = p.xi1;
  p.eta2 = p.xi2;
  auto gen = testutil::rng(34);
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  const State z0 = testutil::random_state(gen, 0.5, 0.8);
  const auto c0 = first_integrals(p, z0);
  ASSERT_TRUE(c0.has_value());
  ControlSignal sig = ControlSignal::constant(Control{ud(gen), ud(gen)}, 1.0);
  IntegrateOptions io;
  io.dt_max = 1e-3;
  const Trajectory traj = integrate(p, z0, sig, io);
  for (const State& z : traj.states) {
    const auto c = first_integrals(p, z);
    EXPECT_LT(std::abs(c->first - c0->first), 1e-8);
    EXPECT_LT(std::abs(c->second - c0->second), 1e-8);
  }
}

TEST(Model, AnisotropicDragHasNoSuchIntegral) {
  EXPECT_FALSE(first_integrals(SwimmerParams::canonical(), State::origin()).has_value());
}

TEST(Model, BalancedMomentsFreezeTheFoldAngle) {
  SwimmerParams p;  // symmetric geometry
  p.m1 = 1.0;
  p.m2 = 1.0;
  ASSERT_DOUBLE_EQ(magnetization_balance(p), 0.0);
  auto gen = testutil::rng(35);
  std::uniform_real_distribution<double> ud(-0.8, 0.8);
  IntegrateOptions io;
  io.dt_max = 1e-3;
  for (int k = 0; k < 5; ++k) {
    const State z0{ud(gen), ud(gen), ud(gen), 0.0};
    const ControlSignal sig = ControlSignal::constant(Control{ud(gen), ud(gen)}, 1.0);
    const Trajectory traj = integrate(p, z0, sig, io);
    for (const State& z : traj.states) EXPECT_LT(std::abs(z.alpha), 1e-9);
  }
}

TEST(Model, LoadVectorMatchesTorqueBalance) {
  auto gen = testutil::rng(36);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const SwimmerParams p = testutil::random_params(gen);
    const State z = testutil::random_state(gen);
    const Control u{ud(gen), ud(gen)};
    // loads of the realized velocity must balance the applied torques
    const Eigen::Vector4d zdot = rhs(p, z, u);
    const Eigen::Vector4d drag = generalized_loads_from_quadrature(p, z, zdot);
    const double c = std::cos(z.alpha), s = std::sin(z.alpha);
    const double t1m = p.m1 * (c * u.h_perp - s * u.h_par);
    const double t2m = p.m2 * u.h_perp;
    // (fx, fy, joint torque, segment-2 torque) of drag + applied = 0
    EXPECT_LT(std::abs(drag[0]), 1e-7);
    EXPECT_LT(std::abs(drag[1]), 1e-7);
    EXPECT_LT(std::abs(drag[2] + t1m + t2m), 1e-7) << "draw " << k;
    EXPECT_LT(std::abs(drag[3] + p.kappa * z.alpha + t2m), 1e-7) << "draw " << k;
  }
}
