#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "sov/dynamics.hpp"
#include "sov/groundstate.hpp"
#include "sov/mixedmode.hpp"

using namespace sov;

namespace {

const Grid2D kBox(8.0, 64);

const SolveResult<RadialPair>& profile() {
  static const auto s = solve_semivortex(0, 0.4, Parameters{}, RadialGrid(8.0, 0.02));
  return s;
}

}  // namespace

TEST(MirrorCombination, EndpointsOfTheFamily) {
  std::mt19937_64 rng(4);
  const auto u = sov::testing::random_pair(kBox, rng);
  EXPECT_EQ(sov::testing::distance(mirror_combination(u, 0.0), u), 0.0);
  const auto v = mirror_combination(u, kPi / 2.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < u.plus.size(); ++i) {
    worst = std::max(worst, std::abs(v.plus[i] + std::conj(u.minus[i])));
    worst = std::max(worst, std::abs(v.minus[i] - std::conj(u.plus[i])));
  }
  EXPECT_LT(worst, 1e-15);
  // applying the quarter turn twice gives -u
  FieldPair2D w = mirror_combination(v, kPi / 2.0);
  w.axpy(1.0, u);
  EXPECT_LT(l2_norm(w), 1e-14 * l2_norm(u));
}

TEST(MirrorCombination, PreservesDensityAndH1ForAnyPair) {
  std::mt19937_64 rng(8);
  const auto u = sov::testing::random_pair(kBox, rng);
  for (double eta : {0.3, 1.0, 2.5}) {
    const auto f = mirror_combination(u, eta);
    EXPECT_NEAR(h1_norm(f), h1_norm(u), 1e-12 * h1_norm(u));
    EXPECT_NEAR(mass(f), mass(u), 1e-12 * mass(u));
  }
}

TEST(MixedMode, IdentitiesAcrossEta) {
  const Parameters p;
  const auto& s = profile();
  for (int k = 0; k < 8; ++k) {
    const double eta = kPi * k / 8.0;
    const auto F = build_mixed(s.pair, eta, kBox, p);
    const auto r = verify_mixed(F, s.pair, s.omega, p, eta);
    EXPECT_TRUE(r.passed) << eta;
    EXPECT_LE(r.density_error, 1e-12);
    EXPECT_LE(r.kinetic_density_error, 1e-10);
    EXPECT_LE(r.rel_total, 1e-10);
    EXPECT_LE(r.rel_nonlinear, 1e-10);
    EXPECT_LE(r.rel_vso, 1e-10);
    EXPECT_LE(r.residual_mixed, r.residual_lifted + 1e-8);
    EXPECT_DOUBLE_EQ(r.eta, eta);
  }
}

TEST(MixedMode, EnergyMatchesPlanarSemivortex) {
  const Parameters p;
  const auto& s = profile();
  const auto F = build_mixed(s.pair, kPi / 4.0, kBox, p);
  // spline lift at h = 0.25: mass error ~1.6e-5 relative
  EXPECT_NEAR(mass(F), 2.0 * kPi * 0.4, 1e-4 * 2.0 * kPi * 0.4);
  EXPECT_NEAR(energy(F, p).total, 2.0 * kPi * s.energy.total, 1e-3 * std::abs(2.0 * kPi * s.energy.total));
}

TEST(MixedMode, VerifyDetectsAWrongState) {
  const Parameters p;
  const auto& s = profile();
  FieldPair2D F = build_mixed(s.pair, 0.5, kBox, p);
  F *= 1.01;
  EXPECT_FALSE(verify_mixed(F, s.pair, s.omega, p, 0.5).passed);
}

TEST(MixedMode, NeedsEqualCouplings) {
  Parameters p;
  p.lambda_zero = 0.5;
  const auto& s = profile();
  EXPECT_THROW(build_mixed(s.pair, 0.5, kBox, p), UnequalLambda);
  EXPECT_THROW(verify_mixed(lift_to_2d(s.pair, kBox), s.pair, s.omega, p), UnequalLambda);
}

TEST(MixedMode, MirrorOfStationaryStateIsStationary) {
  GroundstateOptions o;
  o.flow.tol = 1e-10;
  o.flow.keep_trace = false;
  const Parameters p;
  const auto gs = solve_groundstate(1.0, p, kBox, seed::SemiVortex{0, {}}, o);
  const auto& Q = gs.solve.pair;
  for (double eta : {kPi / 4.0, kPi / 2.0}) {
    const auto F = mirror_combination(Q, eta);
    EXPECT_LT(se_residual_2d(F, gs.solve.omega, p), 1e-9) << eta;
    EXPECT_NEAR(energy(F, p).total, gs.solve.energy.total, 1e-12) << eta;
  }
  // a stationary state rotates in phase only, so the flow commutes with the family
  EvolutionConfig c;
  c.dt = 0.01;
  c.t_final = 1.0;
  c.record_every = 1 << 30;
  const auto F = mirror_combination(Q, kPi / 3.0);
  FieldPair2D want = F;
  want *= std::polar(1.0, gs.solve.omega);
  EXPECT_LT(sov::testing::distance(evolve(F, p, c).final_state, want), 1e-4);
}
