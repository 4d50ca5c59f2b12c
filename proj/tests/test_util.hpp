#ifndef MELSWIM_TESTS_TEST_UTIL_HPP
#define MELSWIM_TESTS_TEST_UTIL_HPP

#include <random>
#include <vector>

#include "melswim/params.hpp"
#include "melswim/state.hpp"

namespace melswim::testutil {

// Fixed seeds keep every randomized check reproducible; a failure message
// naming the draw index is enough to replay it.
inline std::mt19937_64 rng(std::uint64_t salt = 0) {
  return std::mt19937_64(0x6d656c7377696dull ^ salt);
}

/// Random admissible parameter set: positive lengths and drags, normal drag
/// at least the tangential one on each segment, both moments nonzero and the
/// moment balance bounded away from zero.
inline SwimmerParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> len(0.5, 2.0);
  std::uniform_real_distribution<double> drag(0.4, 1.6);
  std::uniform_real_distribution<double> gap(0.2, 1.2);
  std::uniform_real_distribution<double> mom(0.3, 2.5);
  std::bernoulli_distribution flip(0.5);
  for (;;) {
    SwimmerParams p;
    p.l1 = len(gen);
    p.l2 = len(gen);
    p.xi1 = drag(gen);
    p.xi2 = drag(gen);
    p.eta1 = p.xi1 + gap(gen);
    p.eta2 = p.xi2 + gap(gen);
    p.m1 = mom(gen) * (flip(gen) ? 1.0 : -1.0);
    p.m2 = mom(gen) * (flip(gen) ? 1.0 : -1.0);
    p.kappa = drag(gen) + 0.4;
    if (std::abs(magnetization_balance(p)) > 0.5) return p;
  }
}

inline State random_state(std::mt19937_64& gen, double spatial = 1.0, double fold = 1.2) {
  std::uniform_real_distribution<double> pos(-spatial, spatial);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  std::uniform_real_distribution<double> a(-fold, fold);
  return State{pos(gen), pos(gen), ang(gen), a(gen)};
}

}  // namespace melswim::testutil

#endif  // MELSWIM_TESTS_TEST_UTIL_HPP
