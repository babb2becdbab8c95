#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sov/bessel.hpp"
#include "sov/functional.hpp"
#include "sov/radial.hpp"

using namespace sov;

namespace {

FlowOptions quiet_flow() {
  FlowOptions f;
  f.keep_trace = false;
  return f;
}

const SolveResult<RadialPair>& reference_solve() {
  static const auto s = solve_semivortex(0, 0.05, Parameters{}, RadialGrid(16.0, 0.02), {quiet_flow(), {}});
  return s;
}

RadialPair random_radial(const RadialGrid& g, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RadialPair p(g, m);
  const double a = nd(rng), b = nd(rng), c = nd(rng), d = nd(rng);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double r = g.r(j);
    const double e = std::exp(-0.3 * r * r);
    p.v_plus[j] = Complex(a, b) * std::pow(r, std::abs(m)) * e * (1.0 + 0.2 * std::sin(2.0 * r));
    p.v_minus[j] = Complex(c, d) * std::pow(r, std::abs(m + 1)) * e * (1.0 + 0.3 * std::cos(r));
  }
  return p;
}

}  // namespace

TEST(RadialEnergy, ZeroPair) {
  const auto e = energy_m(RadialPair(RadialGrid(8.0, 0.05), 0), Parameters{});
  EXPECT_EQ(e.kinetic, 0.0);
  EXPECT_EQ(e.vso, 0.0);
  EXPECT_EQ(e.nonlinear, 0.0);
  EXPECT_EQ(e.total, 0.0);
}

TEST(RadialEnergy, MassWeights) {
  const RadialGrid g(10.0, 0.01);
  RadialPair p(g, 0);
  for (std::size_t j = 0; j < g.n; ++j) p.v_plus[j] = std::exp(-0.5 * g.r(j) * g.r(j));
  // int e^{-r^2} r dr = 1/2 (midpoint rule is second order)
  EXPECT_NEAR(mass_m(p), 0.5, 1e-5);
}

TEST(RadialEnergy, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  const RadialGrid g(10.0, 0.05);
  Parameters p;
  p.lambda_zero = 0.7;
  for (int m : {-2, -1, 0, 1}) {
    RadialPair u = random_radial(g, m, rng);
    const RadialPair G = gradient_m(u, p);
    for (int t = 0; t < 5; ++t) {
      const RadialPair v = random_radial(g, m, rng);
      const double h = 1e-5;
      RadialPair a = u, b = u;
      a.axpy(h, v);
      b.axpy(-h, v);
      const double fd = (energy_m(a, p).total - energy_m(b, p).total) / (2.0 * h);
      const double an = radial_dot(G, v);
      EXPECT_LT(std::abs(fd - an), 1e-6 * std::abs(an)) << "m " << m;
    }
  }
}

TEST(RadialEnergy, LiftMatchesPlanarEnergy) {
  // E(e^{im theta} v+, e^{i(m+1) theta} v-) = 2 pi E_m(v+, v-)
  const Parameters p;
  const auto s = solve_semivortex(0, 0.5, p, RadialGrid(16.0, 0.002), {quiet_flow(), {}});
  const auto u = lift_to_2d(s.pair, Grid2D(16.0, 256));
  const auto E = energy(u, p);
  const auto& e = s.energy;
  const double tp = 2.0 * kPi;
  EXPECT_NEAR(E.kinetic, tp * e.kinetic, 1e-6 * std::abs(tp * e.kinetic));
  EXPECT_NEAR(E.vso, tp * e.vso, 1e-6 * std::abs(tp * e.vso));
  EXPECT_NEAR(E.nonlinear, tp * e.nonlinear, 1e-6 * std::abs(tp * e.nonlinear));
  EXPECT_NEAR(E.total, tp * e.total, 1e-6 * std::abs(tp * e.total));
  EXPECT_NEAR(mass(u), tp * 0.5, 1e-6 * tp * 0.5);
}

TEST(RadialResidual, ZeroPair) {
  EXPECT_EQ(se_residual_m(RadialPair(RadialGrid(8.0, 0.05), 0), 0.3, Parameters{}), 0.0);
}

TEST(RadialResidual, ConvergedAndAffineInOmega) {
  const auto& s = reference_solve();
  EXPECT_LT(se_residual_m(s.pair, s.omega, Parameters{}), 1e-8);
  const double r = se_residual_m(s.pair, s.omega + 0.1, Parameters{});
  EXPECT_NEAR(r, 0.1 * std::sqrt(mass_m(s.pair)), 1e-7);
}

TEST(Semivortex, ConvergesWithPositiveOmega) {
  const auto& s = reference_solve();
  EXPECT_GT(s.omega, 0.0);
  EXPECT_LT(s.residual, 1e-8);
  EXPECT_NEAR(mass_m(s.pair), 0.05, 1e-12 * 0.05);
  // regression: h = 0.02, r_max = 16
  EXPECT_NEAR(s.energy.total, -0.0124117190418886, 1e-12);
  EXPECT_NEAR(s.omega, 0.4979391, 1e-6);
}

TEST(Semivortex, MassProjectionAndMonotoneTrace) {
  FlowOptions f;
  f.keep_trace = true;
  const auto s = solve_semivortex(1, 0.2, Parameters{}, RadialGrid(12.0, 0.04), {f, {}});
  ASSERT_GT(s.trace.size(), 2u);
  for (std::size_t i = 1; i < s.trace.size(); ++i)
    EXPECT_LE(s.trace[i].energy, s.trace[i - 1].energy + 1e-12 * std::abs(s.trace[i - 1].energy));
  EXPECT_NEAR(mass_m(s.pair), 0.2, 1e-12 * 0.2);
}

TEST(Semivortex, MirrorWindingsHaveEqualEnergy) {
  const Parameters p;
  const RadialGrid g(16.0, 0.02);
  for (int m : {0, 1}) {
    const auto a = solve_semivortex(m, 0.05, p, g, {quiet_flow(), {}});
    const auto b = solve_semivortex(-(m + 1), 0.05, p, g, {quiet_flow(), {}});
    EXPECT_LE(std::abs(a.energy.total - b.energy.total), 1e-6) << "m " << m;
    // the discrete mirror map is exact
    EXPECT_NEAR(energy_m(mirror(a.pair), p).total, a.energy.total, 1e-15);
  }
}

TEST(Semivortex, HigherWindingsCostMore) {
  const Parameters p;
  const RadialGrid g(16.0, 0.02);
  const double e0 = reference_solve().energy.total;
  const double e1 = solve_semivortex(1, 0.05, p, g, {quiet_flow(), {}}).energy.total;
  EXPECT_NEAR(e1, -0.0124020894995, 1e-11);
  EXPECT_GT(e1, e0);
}

TEST(Semivortex, LiftedResidualSmall) {
  const Parameters p;
  const auto s = solve_semivortex(0, 0.5, p, RadialGrid(16.0, 0.02), {quiet_flow(), {}});
  const auto u = lift_to_2d(s.pair, Grid2D(16.0, 128));
  // grid-transfer error of the spline lift dominates (measured 3.4e-4)
  EXPECT_LT(se_residual_2d(u, s.omega, p), 1e-3);
}

TEST(Semivortex, Hdot1OverRhoBounded) {
  const Parameters p;
  const RadialGrid g(16.0, 0.02);
  for (double rho : {0.01, 0.02, 0.05}) {
    const auto s = solve_semivortex(0, rho, p, g, {quiet_flow(), {}});
    const double ratio = hdot1_m(s.pair) / rho;
    EXPECT_GT(ratio, 0.5);
    EXPECT_LT(ratio, 2.0);
  }
}

TEST(Semivortex, RejectsBadInput) {
  EXPECT_THROW(solve_semivortex(0, -1.0, Parameters{}, RadialGrid(8.0, 0.05)), OutOfRange);
  EXPECT_THROW(solve_semivortex(0, 0.1, Parameters{}, RadialGrid(8.0, 0.2)), OutOfRange);
  EXPECT_THROW(RadialGrid(0.1, 0.05), GridTooSmall);
}

TEST(Semivortex, IterationLimitCarriesTrace) {
  FlowOptions f;
  f.max_iterations = 3;
  try {
    solve_semivortex(0, 0.05, Parameters{}, RadialGrid(16.0, 0.02), {f, {}});
    FAIL() << "expected an iteration limit";
  } catch (const IterationLimit& e) {
    EXPECT_FALSE(e.trace.empty());
  }
}

TEST(Semivortex, WitnessSeedOnlyLowersEnergy) {
  const Parameters p;
  WitnessConfig w;
  w.R = 20.0;
  const RadialGrid g(40.0, 0.05);
  const RadialPair seed = witness_pair(w, g);
  const double e_seed = energy_m(seed, p).total;
  const auto s = solve_semivortex(0, w.rho, p, g, {quiet_flow(), seed});
  EXPECT_LE(s.energy.total, e_seed);
}

TEST(Subadditivity, HalvesAndQuarters) {
  const Parameters p;
  const RadialGrid g(16.0, 0.02);
  const double rho = 0.05;
  const auto [a, b, c] = subadditivity_probe_m(0, rho, rho / 2.0, p, g, {quiet_flow(), {}});
  EXPECT_LE(a, b + c + 1e-8);
  EXPECT_LT(a, 2.0 * b);  // strict form
  const auto [a2, b2, c2] = subadditivity_probe_m(0, rho, rho / 4.0, p, g, {quiet_flow(), {}});
  EXPECT_LE(a2, b2 + c2 + 1e-8);
  EXPECT_THROW(subadditivity_probe_m(0, rho, rho, p, g), OutOfRange);
}

TEST(Subadditivity, SmallMassAboveLinearBottom) {
  const Parameters p;
  const RadialGrid g(16.0, 0.02);
  for (double eta : {1e-3, 4e-3}) {
    const auto s = solve_semivortex(0, eta, p, g, {quiet_flow(), {}});
    EXPECT_GE(s.energy.total / eta, -0.25 * p.nu * p.nu);
  }
}

TEST(Lift, SplineReproducesProfile) {
  const RadialGrid g(10.0, 0.01);
  RadialPair p(g, 1);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double r = g.r(j);
    p.v_plus[j] = r * std::exp(-r * r);
    p.v_minus[j] = Complex(0.0, r * r * std::exp(-r * r));
  }
  const RadialSpline sp(p.v_plus, g, 1);
  for (double r : {0.0, 0.013, 0.5, 1.234, 3.0})
    EXPECT_NEAR(sp(r).real(), r * std::exp(-r * r), 1e-6) << r;
  EXPECT_EQ(sp(10.5), Complex{});
  const auto u = lift_to_2d(p, Grid2D(8.0, 64));
  EXPECT_EQ(*u.winding_plus, 1);
  EXPECT_EQ(*u.winding_minus, 2);
}

TEST(Profile, CsvHasHeaderAndRows) {
  const RadialGrid g(1.0, 0.1);
  RadialPair p(g, 0);
  std::ostringstream os;
  write_profile_csv(os, p);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "r,re_plus,im_plus,re_minus,im_minus");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 11);
}
