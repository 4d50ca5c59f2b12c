#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "melswim/integrate.hpp"
#include "melswim/linearize.hpp"
#include "melswim/signal.hpp"

#include "test_util.hpp"

using namespace melswim;

namespace {

Eigen::Matrix4d fd_jacobian(const SwimmerParams& p, Field f, const State& z, double h) {
  Eigen::Matrix4d j;
  for (int c = 0; c < 4; ++c) {
    Eigen::Vector4d e = Eigen::Vector4d::Zero();
    e[c] = h;
    const State zp = State::from_vec(z.vec() + e);
    const State zm = State::from_vec(z.vec() - e);
    j.col(c) = (field_value(p, f, zp) - field_value(p, f, zm)) / (2.0 * h);
  }
  return j;
}

}  // namespace

TEST(Linearize, AnalyticJacobiansMatchFiniteDifferences) {
  auto gen = testutil::rng(51);
  for (int k = 0; k < 20; ++k) {
    const SwimmerParams p = testutil::random_params(gen);
    const State z = testutil::random_state(gen, 1.0, 1.0);
    for (Field f : {Field::F0, Field::F1, Field::F2, Field::X3, Field::X4}) {
      const Eigen::Matrix4d a = jacobian_field(p, f, z);
      const Eigen::Matrix4d n = fd_jacobian(p, f, z, 1e-6);
      EXPECT_LT((a - n).cwiseAbs().maxCoeff(), tol::jacobian_fd_abs * std::max(1.0, a.norm()))
          << "draw " << k << " field " << static_cast<int>(f);
    }
  }
}

TEST(Linearize, CanonicalKalmanRankIsTwo) {
  const KalmanResult r = kalman_rank_at_origin(SwimmerParams::canonical());
  EXPECT_EQ(r.rank, 2);
}

TEST(Linearize, KalmanRankNeverExceedsTwo) {
  auto gen = testutil::rng(52);
  for (int k = 0; k < 50; ++k) {
    const KalmanResult r = kalman_rank_at_origin(testutil::random_params(gen));
    EXPECT_LE(r.rank, 2) << "draw " << k;
  }
}

TEST(Linearize, GramianAlongBentArcReachesFullRank) {
  const SwimmerParams p = SwimmerParams::canonical();
  IntegrateOptions io;
  io.dt_max = 1e-4;
  io.estimate_error = false;
  const Trajectory arc =
      integrate(p, State::origin(), ControlSignal::constant(Control{0.0, 0.01}, 0.5), io);
  const GramianResult g = gramian_rank(linearize_along(p, arc), 0.0, 0.5);
  EXPECT_EQ(g.rank, 4);
  EXPECT_GT(g.sigma_min, 0.0);
  // reported singular values are those of the input-to-state map
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(g.singular_values[i] * g.singular_values[i], g.eigenvalues[i],
                1e-10 * std::max(1.0, g.eigenvalues[i]));
}

TEST(Linearize, GramianAtTheEquilibriumStaysRankTwo) {
  const SwimmerParams p = SwimmerParams::canonical();
  IntegrateOptions io;
  io.dt_max = 1e-4;
  io.estimate_error = false;
  const Trajectory still = integrate(p, State::origin(), ControlSignal::zero(0.5), io);
  const GramianResult g = gramian_rank(linearize_along(p, still), 0.0, 0.5);
  EXPECT_EQ(g.rank, 2);
}

TEST(Linearize, GramianGrowsWithTheWindow) {
  const SwimmerParams p = SwimmerParams::canonical();
  IntegrateOptions io;
  io.dt_max = 1e-4;
  io.estimate_error = false;
  const Trajectory arc =
      integrate(p, State::origin(), ControlSignal::constant(Control{0.0, 0.01}, 0.5), io);
  const auto samples = linearize_along(p, arc);
  const GramianResult g1 = gramian_rank(samples, 0.0, 0.25);
  const GramianResult g2 = gramian_rank(samples, 0.0, 0.5);
  EXPECT_GE(g2.sigma_max, g1.sigma_max);
}
