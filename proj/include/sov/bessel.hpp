#ifndef SOV_BESSEL_HPP
#define SOV_BESSEL_HPP

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "sov/core.hpp"
#include "sov/radial.hpp"

namespace sov {

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, integer order.
//
//   small x              power series (long double)
//   large x              Hankel expansion P cos(chi) - Q sin(chi)
//   otherwise            Miller downward recurrence, normalised with
//                        J_0 + 2 sum J_2k = 1
//
// The series is used for x <= 12 and whenever (x/2)^2 <= l + 1; the Hankel
// expansion from x >= max(25, l^2 / 2) where its smallest term is far below
// long double epsilon.

inline constexpr int kBesselMaxOrder = 64;
inline constexpr double kBesselMaxArg = 1e4;

namespace detail {

inline long double bessel_series(int l, long double x) {
  const long double q = -0.25L * x * x;
  long double term = 1.0L;
  for (int k = 1; k <= l; ++k) term *= x / (2.0L * k);
  long double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= q / (static_cast<long double>(n) * (n + l));
    sum += term;
    if (std::fabs(term) <= std::numeric_limits<long double>::epsilon() * std::fabs(sum) * 1e-2L &&
        n > 2)
      break;
  }
  return sum;
}

inline long double bessel_hankel(int l, long double x) {
  const long double mu = 4.0L * l * l;
  long double p = 0.0L, q = 0.0L;
  long double term = 1.0L;  // a_k / x^k
  long double last = std::numeric_limits<long double>::max();
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      const long double odd = 2.0L * k - 1.0L;
      term *= (mu - odd * odd) / (8.0L * k * x);
    }
    const long double mag = std::fabs(term);
    if (k > 2 && mag > last) break;  // asymptotic series started to diverge
    const int r = k % 4;
    // P collects even k with signs (+,-,...), Q odd k with signs (+,-,...)
    if (r == 0) p += term;
    else if (r == 1) q += term;
    else if (r == 2) p -= term;
    else q -= term;
    if (mag < std::numeric_limits<long double>::epsilon() * 1e-3L) break;
    last = mag;
  }
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double chi = x - (0.5L * l + 0.25L) * pi;
  return std::sqrt(2.0L / (pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

inline long double bessel_miller(int l, long double x) {
  const long double top = std::max<long double>(l, x);
  int start = static_cast<int>(top + 30.0L + 3.0L * std::sqrt(top));
  if (start % 2) ++start;
  long double jp1 = 0.0L, j = 1e-300L, result = 0.0L, norm = 0.0L;
  for (int k = start; k > 0; --k) {
    const long double jm1 = (2.0L * k / x) * j - jp1;
    jp1 = j;
    j = jm1;  // now J_{k-1}
    if (k - 1 == l) result = j;
    if ((k - 1) % 2 == 0) norm += (k - 1 == 0) ? j : 2.0L * j;
    if (std::fabs(j) > 1e1000L) {
      j *= 1e-1000L;
      jp1 *= 1e-1000L;
      result *= 1e-1000L;
      norm *= 1e-1000L;
    }
  }
  return result / norm;
}

}  // namespace detail

/// J_l(x) for 0 <= l <= 64, 0 <= x <= 1e4.
inline double bessel_j(int l, double x) {
  if (l < 0 || l > kBesselMaxOrder) throw OutOfRange("bessel_j: order outside [0, 64]");
  if (!(x >= 0.0) || x > kBesselMaxArg) throw OutOfRange("bessel_j: argument outside [0, 1e4]");
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  const long double lx = x;
  if (x <= 12.0 || 0.25 * x * x <= l + 1.0) return static_cast<double>(detail::bessel_series(l, lx));
  if (x >= std::max(25.0, 0.5 * l * l)) return static_cast<double>(detail::bessel_hankel(l, lx));
  return static_cast<double>(detail::bessel_miller(l, lx));
}

/// Signed order, J_{-l} = (-1)^l J_l.
inline double bessel_jn(int l, double x) {
  const double v = bessel_j(std::abs(l), x);
  return (l < 0 && (std::abs(l) % 2 == 1)) ? -v : v;
}

/// J_l'(x) = (J_{l-1} - J_{l+1}) / 2.
inline double bessel_jn_prime(int l, double x) {
  return 0.5 * (bessel_jn(l - 1, x) - bessel_jn(l + 1, x));
}

/// |J_l(x) - sqrt(2/(pi x)) cos(x - l pi/2 - pi/4)|.
inline double asymptotic_gap(int l, double x) {
  if (x < 10.0) throw OutOfRange("asymptotic_gap needs x >= 10");
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double lead =
      std::sqrt(2.0L / (pi * x)) * std::cos(static_cast<long double>(x) - (0.5L * l + 0.25L) * pi);
  return static_cast<double>(std::fabs(static_cast<long double>(bessel_jn(l, x)) - lead));
}

// ---------------------------------------------------------------------------
// Cutoff chi: 1 on [0,1], 0 on [2,inf), quintic smoothstep in between (C^2).

inline double cutoff(double s) {
  const double t = std::clamp(s - 1.0, 0.0, 1.0);
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}
inline double cutoff_d1(double s) {
  const double t = std::clamp(s - 1.0, 0.0, 1.0);
  return -30.0 * t * t * (1.0 - t) * (1.0 - t);
}
inline double cutoff_d2(double s) {
  const double t = std::clamp(s - 1.0, 0.0, 1.0);
  return -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
}

struct WitnessConfig {
  int m = 0;
  double rho = 0.05;
  double R = 50.0;
  double nu = 1.0;
};

/// v- = a chi(r/R) J_{m+1}(nu r), v+ = -(1/nu)((m+1) v-/r + v-'), with exact
/// derivatives attached and a < 0 fixed by M = rho.
inline RadialPair witness_pair(const WitnessConfig& cfg, const RadialGrid& grid) {
  if (!(cfg.rho > 0.0) || !(cfg.R > 0.0) || !(cfg.nu > 0.0)) throw OutOfRange("witness needs rho, R, nu > 0");
  if (grid.r_max() < 2.0 * cfg.R * (1.0 - 1e-12)) throw GridTooSmall("witness grid must reach 2R");
  const int m = cfg.m;
  const double nu = cfg.nu, R = cfg.R;
  RadialPair p(grid, m);
  CVector dp(grid.n), dm(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double r = grid.r(j);
    const double s = r / R;
    const double c0 = cutoff(s), c1 = cutoff_d1(s), c2 = cutoff_d2(s);
    if (c0 == 0.0 && c1 == 0.0) continue;
    const double x = nu * r;
    const double jm = bessel_jn(m, x), jm1 = bessel_jn(m + 1, x);
    const double jmp = bessel_jn_prime(m, x), jm1p = bessel_jn_prime(m + 1, x);
    // a = 1 here; rescaled below
    p.v_minus[j] = c0 * jm1;
    dm[j] = c1 / R * jm1 + c0 * nu * jm1p;
    p.v_plus[j] = -c0 * jm - c1 / (nu * R) * jm1;
    dp[j] = -(c1 / R * jm + c0 * nu * jmp) - (c2 / R * jm1 + c1 * nu * jm1p) / (nu * R);
  }
  const double m1 = mass_m(p);
  if (!(m1 > 0.0)) throw NumericalFailure("witness profile has zero mass");
  const double a = -std::sqrt(cfg.rho / m1);
  for (std::size_t j = 0; j < grid.n; ++j) {
    p.v_plus[j] *= a;
    p.v_minus[j] *= a;
    dp[j] *= a;
    dm[j] *= a;
  }
  p.d_plus = std::move(dp);
  p.d_minus = std::move(dm);
  return p;
}

/// The normalisation a recovered from a built witness pair.
inline double witness_amplitude(const RadialPair& p, const WitnessConfig& cfg) {
  // v- = a chi J_{m+1}; read a off the largest |chi J_{m+1}| sample
  double best = 0.0, a = 0.0;
  for (std::size_t j = 0; j < p.grid.n; ++j) {
    const double r = p.grid.r(j);
    const double base = cutoff(r / cfg.R) * bessel_jn(cfg.m + 1, cfg.nu * r);
    if (std::abs(base) > best) {
      best = std::abs(base);
      a = p.v_minus[j].real() / base;
    }
  }
  return a;
}

/// The two completed squares of E^lin_m + nu^2 M / 4 evaluated with the
/// exact derivatives: (1/4)|A v- + nu v+|^2 and (1/4)|Atil v+ - nu v-|^2.
inline std::pair<double, double> witness_squares(const RadialPair& p, double nu) {
  if (!p.d_plus || !p.d_minus) throw InvalidField("witness squares need exact derivatives");
  const auto w = p.grid.weights();
  CompensatedSum s1, s2;
  const double m = p.m, m1 = p.m + 1;
  for (std::size_t j = 0; j < p.grid.n; ++j) {
    const double r = p.grid.r(j);
    const Complex q1 = (*p.d_minus)[j] + m1 * p.v_minus[j] / r + nu * p.v_plus[j];
    const Complex q2 = (*p.d_plus)[j] - m * p.v_plus[j] / r - nu * p.v_minus[j];
    s1.add(w[j] * std::norm(q1));
    s2.add(w[j] * std::norm(q2));
  }
  return {0.25 * s1.value(), 0.25 * s2.value()};
}

struct WitnessRow {
  double R = 0.0;
  double a = 0.0;
  double first_square = 0.0;
  double elin_gap = 0.0;
  double elin = 0.0;
  double nonlinear = 0.0;
  double total_deficit = 0.0;
};

struct WitnessReport {
  WitnessConfig base;
  std::vector<WitnessRow> rows;
  double gap_slope = 0.0;           // d log(elin_gap) / d log R
  double nonlinear_slope = 0.0;     // d log(N / log R) / d log R
  double window_lo = 0.0;           // min a^2 R / rho
  double window_hi = 0.0;           // max a^2 R / rho
  double n_scaled_min = 0.0;        // min N R^2 / log R
  std::optional<double> r_star;     // smallest R from which the deficit stays negative
  std::optional<double> r_star_extrapolated;  // from deficit R^2 = A - B log R
};

inline double witness_spacing(double nu) { return std::min(0.05, 1.0 / (20.0 * nu)); }

inline WitnessRow witness_row(const WitnessConfig& cfg, const Parameters& par) {
  const RadialGrid grid(2.0 * cfg.R, witness_spacing(cfg.nu));
  const RadialPair p = witness_pair(cfg, grid);
  const EnergyBreakdown e = energy_m(p, par);
  const auto [s1, s2] = witness_squares(p, cfg.nu);
  WitnessRow row;
  row.R = cfg.R;
  row.a = witness_amplitude(p, cfg);
  row.first_square = s1;
  row.elin_gap = s1 + s2;
  row.elin = e.elin;
  row.nonlinear = e.nonlinear;
  row.total_deficit = row.elin_gap - row.nonlinear;
  return row;
}

namespace detail {

inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

}  // namespace detail

inline WitnessReport witness_report(const WitnessConfig& base, const std::vector<double>& R_list,
                                    const Parameters& par) {
  if (R_list.size() < 2) throw OutOfRange("witness sweep needs at least two R values");
  if (par.nu != base.nu) throw OutOfRange("witness nu differs from the parameter set");
  WitnessReport rep;
  rep.base = base;
  for (double R : R_list) {
    if (!(R > 1.0)) throw OutOfRange("witness R must exceed 1");
    WitnessConfig c = base;
    c.R = R;
    rep.rows.push_back(witness_row(c, par));
  }
  std::vector<double> lr, lg, ln, d2;
  rep.window_lo = std::numeric_limits<double>::infinity();
  rep.window_hi = -rep.window_lo;
  rep.n_scaled_min = rep.window_lo;
  for (const auto& row : rep.rows) {
    lr.push_back(std::log(row.R));
    lg.push_back(std::log(row.elin_gap));
    ln.push_back(std::log(row.nonlinear / std::log(row.R)));
    d2.push_back(row.total_deficit * row.R * row.R);
    const double win = row.a * row.a * row.R / base.rho;
    rep.window_lo = std::min(rep.window_lo, win);
    rep.window_hi = std::max(rep.window_hi, win);
    rep.n_scaled_min = std::min(rep.n_scaled_min, row.nonlinear * row.R * row.R / std::log(row.R));
  }
  rep.gap_slope = detail::fit_line(lr, lg).first;
  rep.nonlinear_slope = detail::fit_line(lr, ln).first;
  for (std::size_t i = rep.rows.size(); i-- > 0;) {
    if (rep.rows[i].total_deficit < 0.0)
      rep.r_star = rep.rows[i].R;
    else
      break;
  }
  const auto [slope, icpt] = detail::fit_line(lr, d2);  // deficit R^2 ~ icpt + slope log R
  if (slope < 0.0) rep.r_star_extrapolated = std::exp(-icpt / slope);
  return rep;
}

inline void write_witness_csv(std::ostream& os, const WitnessReport& rep) {
  os << "R,a,elin_gap,nonlinear,total_deficit\n" << std::setprecision(17);
  for (const auto& r : rep.rows)
    os << r.R << ',' << r.a << ',' << r.elin_gap << ',' << r.nonlinear << ',' << r.total_deficit << '\n';
}

}  // namespace sov

#endif  // SOV_BESSEL_HPP
