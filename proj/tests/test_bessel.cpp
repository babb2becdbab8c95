#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sov/bessel.hpp"
#include "sov/reference.hpp"

using namespace sov;

namespace {

// mpmath (50 digits) quadrature of the witness construction at m = 0,
// rho = 0.05, nu = 1 with the quintic cutoff: (R, a, a^2 R / rho, gap, N).
struct WitnessOracle {
  double R, a, window, gap, nonlinear;
};
constexpr WitnessOracle kWitness[] = {
    {50.0, -0.0335929379242056, 1.12848547837953, 1.02746994989155e-5, 7.27261122276352e-7},
    {100.0, -0.0237549195630206, 1.12859240689115, 2.56674087888896e-6, 2.04211884259427e-7},
};

}  // namespace

TEST(BesselJ, ValuesAtZero) {
  EXPECT_EQ(bessel_j(0, 0.0), 1.0);
  for (int l = 1; l <= 10; ++l) EXPECT_EQ(bessel_j(l, 0.0), 0.0);
}

TEST(BesselJ, KnownValues) {
  // Abramowitz & Stegun table 9.1
  EXPECT_NEAR(bessel_j(0, 1.0), 0.765197686557966551, 1e-16);
  EXPECT_NEAR(bessel_j(1, 1.0), 0.440050585744933516, 1e-16);
  EXPECT_NEAR(bessel_j(0, 10.0), -0.245935764451348335, 1e-15);
}

TEST(BesselJ, MatchesExtendedPrecisionSeries) {
  double worst = 0.0;
  for (int l = 0; l <= 8; ++l)
    for (double x = 0.1; x <= 50.0; x += 0.37) {
      const double ref = reference::bessel_j_series(l, x);
      const double rel = std::abs(bessel_j(l, x) - ref) / std::abs(ref);
      worst = std::max(worst, rel);
      EXPECT_LT(rel, 1e-12) << "l " << l << " x " << x;
    }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(BesselJ, AllBranchesAgreeWithSeries) {
  // Miller recurrence region for higher orders
  for (int l : {10, 20, 30})
    for (double x : {13.0, 18.0, 24.0}) {
      const double ref = reference::bessel_j_series(l, x);
      EXPECT_LT(std::abs(bessel_j(l, x) - ref), 1e-12 * std::max(std::abs(ref), 1e-3)) << l << " " << x;
    }
}

TEST(BesselJ, ThreeTermRecurrence) {
  for (double x : {0.5, 5.0, 50.0})
    for (int l = 1; l <= 8; ++l)
      EXPECT_NEAR(2.0 * l / x * bessel_j(l, x), bessel_j(l - 1, x) + bessel_j(l + 1, x), 1e-10) << l << " " << x;
}

TEST(BesselJ, DerivativeRecurrenceAndOde) {
  for (double x : {0.5, 2.0, 5.0, 17.0, 50.0, 300.0})
    for (int l = 0; l <= 8; ++l) {
      const double j = bessel_jn(l, x);
      const double jp = bessel_jn_prime(l, x);
      // J_l' = J_{l-1} - (l/x) J_l
      EXPECT_NEAR(jp, bessel_jn(l - 1, x) - l / x * j, 1e-12);
      const double jpp = 0.5 * (bessel_jn_prime(l - 1, x) - bessel_jn_prime(l + 1, x));
      EXPECT_NEAR(x * x * jpp + x * jp + (x * x - l * l) * j, 0.0, 1e-8) << l << " " << x;
    }
}

TEST(BesselJ, NegativeOrdersByReflection) {
  EXPECT_DOUBLE_EQ(bessel_jn(-3, 2.5), -bessel_j(3, 2.5));
  EXPECT_DOUBLE_EQ(bessel_jn(-4, 2.5), bessel_j(4, 2.5));
}

TEST(BesselJ, RangeErrors) {
  EXPECT_THROW(bessel_j(-1, 1.0), OutOfRange);
  EXPECT_THROW(bessel_j(65, 1.0), OutOfRange);
  EXPECT_THROW(bessel_j(0, -1.0), OutOfRange);
  EXPECT_THROW(bessel_j(0, 2e4), OutOfRange);
}

TEST(AsymptoticGap, UpperEnvelope) {
  double max_xgap = 0.0, max_env = 0.0;
  for (double x = 20.0; x <= 2000.0; x += 0.5) {
    const double g = asymptotic_gap(0, x);
    max_xgap = std::max(max_xgap, x * g);
    max_env = std::max(max_env, std::pow(x, 1.5) * g);
  }
  EXPECT_LE(max_xgap, 1.0);
  // next Hankel term: |(4l^2 - 1)/8| sqrt(2/pi) = 0.0997
  EXPECT_LE(max_env, 0.0998);
  EXPECT_GE(max_env, 0.099);
  EXPECT_LE(asymptotic_gap(1, 100.0), 1.0 / 100.0);
  EXPECT_THROW(asymptotic_gap(0, 5.0), OutOfRange);
}

TEST(Cutoff, SmoothStep) {
  EXPECT_EQ(cutoff(0.5), 1.0);
  EXPECT_EQ(cutoff(2.5), 0.0);
  EXPECT_NEAR(cutoff(1.5), 0.5, 1e-15);
  for (double s = 1.01; s < 2.0; s += 0.1) {
    const double h = 1e-6;
    EXPECT_NEAR(cutoff_d1(s), (cutoff(s + h) - cutoff(s - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(cutoff_d2(s), (cutoff_d1(s + h) - cutoff_d1(s - h)) / (2 * h), 1e-7);
  }
}

TEST(Witness, ProfileFormulas) {
  WitnessConfig cfg;
  cfg.R = 50.0;
  const RadialGrid g(100.0, witness_spacing(1.0));
  const auto p = witness_pair(cfg, g);
  const double a = witness_amplitude(p, cfg);
  EXPECT_LT(a, 0.0);
  EXPECT_NEAR(mass_m(p), cfg.rho, 1e-12 * cfg.rho);
  for (std::size_t j = 0; j < g.n; j += 97) {
    const double r = g.r(j);
    const double want = -a * cutoff(r / cfg.R) * bessel_j(0, r) - a / cfg.R * cutoff_d1(r / cfg.R) * bessel_j(1, r);
    EXPECT_NEAR(p.v_plus[j].real(), want, 1e-15);
    EXPECT_NEAR(p.v_minus[j].real(), a * cutoff(r / cfg.R) * bessel_j(1, r), 1e-15);
  }
}

TEST(Witness, FirstSquareVanishes) {
  for (int m = -2; m <= 2; ++m) {
    WitnessConfig cfg;
    cfg.m = m;
    cfg.R = 50.0;
    const auto p = witness_pair(cfg, RadialGrid(100.0, witness_spacing(1.0)));
    EXPECT_LT(witness_squares(p, 1.0).first, 1e-20) << "m " << m;
  }
}

TEST(Witness, SquaresMatchDiscreteLinearEnergy) {
  // exact-derivative squares vs the face-difference energy: agreement is O(h^2)
  WitnessConfig cfg;
  cfg.R = 50.0;
  const Parameters par;
  double prev = 0.0;
  for (double h : {0.05, 0.025, 0.0125}) {
    const auto p = witness_pair(cfg, RadialGrid(100.0, h));
    const auto [s1, s2] = witness_squares(p, 1.0);
    const double diff = std::abs(energy_m(p, par).elin + 0.25 * cfg.rho - (s1 + s2));
    EXPECT_LT(diff, 2e-3 * (s1 + s2)) << h;
    if (prev > 0.0) EXPECT_NEAR(prev / diff, 4.0, 0.4) << h;
    prev = diff;
  }
}

TEST(Witness, MatchesQuadratureOracle) {
  const Parameters par;
  for (const auto& o : kWitness) {
    WitnessConfig cfg;
    cfg.R = o.R;
    const auto row = witness_row(cfg, par);
    EXPECT_NEAR(row.a, o.a, 2e-6 * std::abs(o.a)) << o.R;
    EXPECT_NEAR(row.a * row.a * o.R / cfg.rho, o.window, 4e-6 * o.window) << o.R;
    EXPECT_NEAR(row.elin_gap, o.gap, 1e-5 * o.gap) << o.R;
    EXPECT_NEAR(row.nonlinear, o.nonlinear, 1e-4 * o.nonlinear) << o.R;
    EXPECT_DOUBLE_EQ(row.total_deficit, row.elin_gap - row.nonlinear);
  }
}

TEST(Witness, ReportScaling) {
  WitnessConfig cfg;
  const auto rep = witness_report(cfg, {50, 100, 200, 400, 800}, Parameters{});
  ASSERT_EQ(rep.rows.size(), 5u);
  EXPECT_NEAR(rep.gap_slope, -2.0, 0.3);
  EXPECT_GT(rep.n_scaled_min, 3e-4);
  EXPECT_GE(rep.window_lo, 1.12848);
  EXPECT_LE(rep.window_hi, 1.12863);
  // deficit R^2 decreases like -log R: the extrapolated crossover is finite
  ASSERT_TRUE(rep.r_star_extrapolated.has_value());
  EXPECT_GT(*rep.r_star_extrapolated, 800.0);
  for (const auto& r : rep.rows) EXPECT_DOUBLE_EQ(r.total_deficit, r.elin_gap - r.nonlinear);

  std::ostringstream os;
  write_witness_csv(os, rep);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "R,a,elin_gap,nonlinear,total_deficit");
}

TEST(Witness, GapSlopeForEveryWinding) {
  for (int m = -2; m <= 2; ++m) {
    WitnessConfig cfg;
    cfg.m = m;
    const auto rep = witness_report(cfg, {50, 100, 200}, Parameters{});
    EXPECT_NEAR(rep.gap_slope, -2.0, 0.3) << "m " << m;
    EXPECT_GT(rep.n_scaled_min, 0.0) << "m " << m;
  }
}

TEST(Witness, GridMustReachTwiceR) {
  WitnessConfig cfg;
  cfg.R = 50.0;
  EXPECT_THROW(witness_pair(cfg, RadialGrid(90.0, 0.05)), GridTooSmall);
}
