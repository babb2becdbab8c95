#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "sov/groundstate.hpp"
#include "sov/mixedmode.hpp"

using namespace sov;

namespace {

GroundstateOptions quiet() {
  GroundstateOptions o;
  o.flow.keep_trace = false;
  return o;
}

const Grid2D kBox(8.0, 64);

const GroundstateResult& dense_state() {
  static const GroundstateResult gs = solve_groundstate(3.0, Parameters{}, kBox, seed::SemiVortex{0, {}}, quiet());
  return gs;
}

double radial_energy(int m, double rho2d, const Parameters& p) {
  return 2.0 * kPi * solve_semivortex(m, rho2d / (2.0 * kPi), p, RadialGrid(8.0, 0.02)).energy.total;
}

}  // namespace

TEST(Groundstate, ConvergesAtRequestedMass) {
  const auto& gs = dense_state();
  EXPECT_LT(gs.solve.residual, 1e-8);
  EXPECT_NEAR(mass(gs.solve.pair), 3.0, 1e-12 * 3.0);
  EXPECT_GT(gs.solve.omega, 0.0);
  EXPECT_LT(gs.boundary_ratio, 0.01);
  EXPECT_EQ(gs.seed, "semivortex(0)");
  // regression, L = 8, n = 64
  EXPECT_NEAR(gs.solve.energy.total, -0.822336223, 1e-8);
}

TEST(Groundstate, BelowEverySemivortexBranch) {
  const Parameters p;
  const double e = dense_state().solve.energy.total;
  for (int m = -2; m <= 2; ++m) EXPECT_LE(e, radial_energy(m, 3.0, p) + 1e-8) << "m " << m;
}

TEST(Groundstate, WeakCrossCouplingKeepsSemivortexOrder) {
  Parameters p;
  p.lambda_zero = 0.5;
  const auto gs = solve_groundstate(3.0, p, kBox, seed::SemiVortex{0, {}}, quiet());
  EXPECT_LE(gs.solve.energy.total, radial_energy(0, 3.0, p) + 1e-8);
  EXPECT_EQ(structure_classifier(gs.solve.pair).kind, Structure::semivortex_like);
}

TEST(Groundstate, StrongCrossCouplingPrefersMixed) {
  Parameters p;
  p.lambda_zero = 2.0;
  const auto rep = groundstate_protocol(3.0, p, kBox, quiet(),
                                        {seed::SemiVortex{0, {}}, seed::MixedMode{0, kPi / 4.0, {}}});
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_EQ(rep.best, 1u);
  EXPECT_GT(rep.semivortex_minus_mixed, 0.01);
  EXPECT_EQ(rep.entries[1].label.kind, Structure::mixed_like);
}

TEST(Groundstate, TorusEnergyBelowLinearBottom) {
  // on the periodic box the small-mass minimiser sits strictly below -rho nu^2/4
  const double rho = 0.05;
  const auto gs = solve_groundstate(rho, Parameters{}, Grid2D(16.0, 64), seed::SemiVortex{0, {}}, quiet());
  EXPECT_LT(gs.solve.energy.total + 0.25 * rho, 0.0);
  EXPECT_NEAR(gs.solve.energy.total, -0.0125008983834, 1e-11);
  EXPECT_TRUE(gs.truncation_warning);
}

TEST(Groundstate, SymmetricSeedsGiveSameEnergy) {
  const auto& Q = dense_state().solve.pair;
  const auto moved = sov::testing::phased(sov::testing::translate(Q, 7, -4), 0.9);
  const auto s = solve_groundstate_from(moved, 3.0, Parameters{}, quiet());
  EXPECT_NEAR(s.energy.total, dense_state().solve.energy.total, 1e-10);
}

TEST(Groundstate, MirrorSeedsAgreeAtEqualCouplings) {
  const auto rep = groundstate_protocol(3.0, Parameters{}, kBox, quiet());
  ASSERT_EQ(rep.entries.size(), 4u);
  for (const auto& e : rep.entries) EXPECT_TRUE(e.converged) << e.seed << " " << e.failure;
  EXPECT_LT(std::abs(rep.semivortex_minus_mixed), 1e-8);
  ASSERT_TRUE(rep.best_state.has_value());
  double lowest = rep.entries[0].energy;
  for (const auto& e : rep.entries) lowest = std::min(lowest, e.energy);
  EXPECT_EQ(rep.entries[rep.best].energy, lowest);
}

TEST(Groundstate, Subadditive) {
  const Parameters p;
  const double e3 = dense_state().solve.energy.total;
  const double e15 = solve_groundstate(1.5, p, kBox, seed::SemiVortex{0, {}}, quiet()).solve.energy.total;
  EXPECT_LT(e3, 2.0 * e15);
}

TEST(Groundstate, RejectsBadInput) {
  EXPECT_THROW(solve_groundstate(0.0, Parameters{}, kBox, seed::Gaussian{}), OutOfRange);
  Parameters p;
  p.nu = 0.0;
  EXPECT_THROW(solve_groundstate(1.0, p, kBox, seed::Gaussian{}), OutOfRange);
}

TEST(Seeds, GaussianShape) {
  const Grid2D g(12.0, 64);
  const double w = 1.5;
  const auto u = make_seed(seed::Gaussian{w}, 1.0, Parameters{}, g, {});
  EXPECT_NEAR(mass(u), 1.25 * kPi * w * w, 1e-10);
  EXPECT_EQ(seed_name(seed::Gaussian{}), "gaussian");
  EXPECT_EQ(seed_name(seed::MixedMode{1, 0.3, {}}), "mixedmode(1)");
  EXPECT_EQ(seed_name(seed::Random{4}), "random(4)");
}

TEST(Seeds, RandomIsDeterministic) {
  const auto a = make_seed(seed::Random{9}, 1.0, Parameters{}, kBox, {});
  const auto b = make_seed(seed::Random{9}, 1.0, Parameters{}, kBox, {});
  const auto c = make_seed(seed::Random{10}, 1.0, Parameters{}, kBox, {});
  EXPECT_EQ(sov::testing::distance(a, b), 0.0);
  EXPECT_GT(sov::testing::distance(a, c), 0.0);
}

TEST(Classifier, LiftedSemivortex) {
  const Parameters p;
  for (int m : {-1, 0, 1}) {
    const auto P = solve_semivortex(m, 0.3, p, RadialGrid(8.0, 0.02)).pair;
    const auto lbl = structure_classifier(lift_to_2d(P, kBox));
    EXPECT_EQ(lbl.kind, Structure::semivortex_like) << m;
    EXPECT_EQ(lbl.m, m);
    EXPECT_GT(lbl.fraction, 0.99);
  }
}

TEST(Classifier, TranslatedSemivortexKeepsLabel) {
  const auto& Q = dense_state().solve.pair;
  EXPECT_EQ(structure_classifier(sov::testing::translate(Q, 5, 3)).to_string(), "semivortex_like(0)");
}

TEST(Classifier, MixedMode) {
  const auto P = solve_semivortex(0, 0.3, Parameters{}, RadialGrid(8.0, 0.02)).pair;
  const auto lbl = structure_classifier(build_mixed(P, kPi / 4.0, kBox, Parameters{}));
  EXPECT_EQ(lbl.kind, Structure::mixed_like);
  EXPECT_EQ(lbl.m, 0);
  EXPECT_EQ(lbl.to_string(), "mixed_like(0)");
}

TEST(Classifier, NoiseIsOther) {
  std::mt19937_64 rng(2);
  EXPECT_EQ(structure_classifier(sov::testing::random_pair(kBox, rng)).kind, Structure::other);
  EXPECT_THROW(structure_classifier(FieldPair2D(kBox)), InvalidField);
}
