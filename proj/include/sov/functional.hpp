#ifndef SOV_FUNCTIONAL_HPP
#define SOV_FUNCTIONAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <tuple>

#include "sov/core.hpp"
#include "sov/fft.hpp"
#include "sov/field.hpp"
#include "sov/grid.hpp"

namespace sov {

struct EnergyBreakdown {
  double kinetic = 0.0;
  double vso = 0.0;
  double nonlinear = 0.0;
  double total = 0.0;
  double elin = 0.0;
};

enum class Sign { plus, minus };

// ---------------------------------------------------------------------------
// Fourier multipliers. All first-order symbols use the Nyquist-free
// wavenumbers so that D-, D+ and their products are mutually consistent:
// the Laplacian is defined as D- D+ (symbol -|k|^2 with the same k).

template <typename Symbol>
CVector apply_multiplier(std::span<const Complex> field, const Grid2D& g, Symbol&& sym) {
  CVector f = to_fourier(field, g.n);
  const auto k = g.derivative_wavenumbers();
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) f[g.index(ix, iy)] *= sym(k[ix], k[iy]);
  fft_backward(f, g.n);
  return f;
}

inline Complex dpm_symbol(Sign s, double kx, double ky) {
  // D+ = d_x + i d_y  ->  i kx - ky ;  D- = d_x - i d_y  ->  i kx + ky
  return s == Sign::plus ? Complex(-ky, kx) : Complex(ky, kx);
}

inline CVector apply_dpm(std::span<const Complex> field, Sign s, const Grid2D& g) {
  if (field.size() != g.size()) throw InvalidField("field does not conform to grid");
  if (!all_finite(field)) throw InvalidField("field has non-finite entries");
  return apply_multiplier(field, g, [s](double kx, double ky) { return dpm_symbol(s, kx, ky); });
}

inline CVector laplacian(std::span<const Complex> field, const Grid2D& g) {
  return apply_multiplier(field, g, [](double kx, double ky) {
    return Complex(-(kx * kx + ky * ky), 0.0);
  });
}

inline void check(const FieldPair2D& u) { u.validate(); }

// ---------------------------------------------------------------------------

inline double mass(const FieldPair2D& u) {
  check(u);
  CompensatedSum s;
  for (std::size_t i = 0; i < u.plus.size(); ++i) s.add(std::norm(u.plus[i]) + std::norm(u.minus[i]));
  return s.value() * u.grid.cell();
}

/// Homogeneous H^1 seminorm squared, int |grad psi+|^2 + |grad psi-|^2.
inline double hdot1(const FieldPair2D& u) {
  check(u);
  const Grid2D& g = u.grid;
  const auto k = g.derivative_wavenumbers();
  CompensatedSum s;
  for (const CVector* comp : {&u.plus, &u.minus}) {
    const CVector f = to_fourier(*comp, g.n);
    for (std::size_t iy = 0; iy < g.n; ++iy)
      for (std::size_t ix = 0; ix < g.n; ++ix)
        s.add((k[ix] * k[ix] + k[iy] * k[iy]) * std::norm(f[g.index(ix, iy)]));
  }
  return s.value() * g.cell() / static_cast<double>(g.size());
}

inline double nonlinear_energy(const FieldPair2D& u, const Parameters& p) {
  CompensatedSum s;
  for (std::size_t i = 0; i < u.plus.size(); ++i) {
    const double a = std::norm(u.plus[i]), b = std::norm(u.minus[i]);
    s.add(p.lambda_plus * a * a + p.lambda_minus * b * b + 2.0 * p.lambda_zero * a * b);
  }
  return 0.25 * s.value() * u.grid.cell();
}

inline EnergyBreakdown energy(const FieldPair2D& u, const Parameters& p) {
  check(u);
  const Grid2D& g = u.grid;
  const CVector dp = apply_dpm(u.plus, Sign::plus, g);    // D+ psi+
  const CVector dm = apply_dpm(u.minus, Sign::minus, g);  // D- psi-
  CompensatedSum kin, so;
  for (std::size_t i = 0; i < g.size(); ++i) {
    kin.add(std::norm(dp[i]) + std::norm(dm[i]));
    so.add((std::conj(u.plus[i]) * dm[i] - std::conj(u.minus[i]) * dp[i]).real());
  }
  EnergyBreakdown e;
  e.kinetic = 0.25 * kin.value() * g.cell();
  e.vso = 0.5 * p.nu * so.value() * g.cell();
  e.nonlinear = nonlinear_energy(u, p);
  e.elin = e.kinetic + e.vso;
  e.total = e.elin - e.nonlinear;
  return e;
}

/// The three terms of the completed-square form of E^lin:
/// (1/4)|D- psi- + nu psi+|^2, (1/4)|D+ psi+ - nu psi-|^2, -nu^2 M / 4.
inline std::array<double, 3> elin_square(const FieldPair2D& u, const Parameters& p) {
  check(u);
  const Grid2D& g = u.grid;
  const CVector dp = apply_dpm(u.plus, Sign::plus, g);
  const CVector dm = apply_dpm(u.minus, Sign::minus, g);
  CompensatedSum a, b;
  for (std::size_t i = 0; i < g.size(); ++i) {
    a.add(std::norm(dm[i] + p.nu * u.plus[i]));
    b.add(std::norm(dp[i] - p.nu * u.minus[i]));
  }
  return {0.25 * a.value() * g.cell(), 0.25 * b.value() * g.cell(),
          -0.25 * p.nu * p.nu * mass(u)};
}

/// Linear part of the Hamiltonian, (-1/2 Lap psi+ + nu D- psi-,
/// -1/2 Lap psi- - nu D+ psi+), applied mode by mode.
inline FieldPair2D linear_operator(const FieldPair2D& u, double nu) {
  check(u);
  const Grid2D& g = u.grid;
  CVector fp = to_fourier(u.plus, g.n), fm = to_fourier(u.minus, g.n);
  const auto k = g.derivative_wavenumbers();
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const std::size_t j = g.index(ix, iy);
      const double kx = k[ix], ky = k[iy];
      const double d = 0.5 * (kx * kx + ky * ky);
      const Complex a = fp[j], b = fm[j];
      fp[j] = d * a + nu * Complex(ky, kx) * b;
      fm[j] = d * b + nu * Complex(ky, -kx) * a;
    }
  fft_backward(fp, g.n);
  fft_backward(fm, g.n);
  FieldPair2D out(g);
  out.plus = std::move(fp);
  out.minus = std::move(fm);
  return out;
}

/// L^2 gradient G of E: dE(U + sV)/ds at s = 0 equals Re<G, V>.
inline FieldPair2D energy_gradient(const FieldPair2D& u, const Parameters& p) {
  FieldPair2D gr = linear_operator(u, p.nu);
  for (std::size_t i = 0; i < u.plus.size(); ++i) {
    const double a = std::norm(u.plus[i]), b = std::norm(u.minus[i]);
    gr.plus[i] -= (p.lambda_plus * a + p.lambda_zero * b) * u.plus[i];
    gr.minus[i] -= (p.lambda_minus * b + p.lambda_zero * a) * u.minus[i];
  }
  return gr;
}

/// L^2 norm of the (SE) residual G + omega U with spectral operators.
inline double se_residual_2d(const FieldPair2D& u, double omega, const Parameters& p) {
  if (!std::isfinite(omega)) throw OutOfRange("omega must be finite");
  FieldPair2D r = energy_gradient(u, p);
  r.axpy(omega, u);
  return l2_norm(r);
}

inline double gn_quotient(const FieldPair2D& u, const Parameters& p) {
  const double m = mass(u);
  const double h = hdot1(u);
  if (m == 0.0 || h == 0.0) throw UndefinedQuotient("GN quotient undefined for the zero pair");
  return nonlinear_energy(u, p) / (m * h);
}

// ---------------------------------------------------------------------------
// Best Gagliardo-Nirenberg constant by multi-start ascent of N on the set
// {M = 1, |U|^2_{H1dot} = kappa}. Directions are the L^2 gradient smoothed by
// (1 + |k|^2 / kappa)^{-1} and made tangent to both constraints; the
// retraction is a heat flow back to the H1dot level plus a mass rescale.

struct CgnOptions {
  int max_iterations = 4000;
  double gain_tol = 1e-9;
  std::uint64_t seed = 20240611;
};

struct CgnResult {
  double value = 0.0;
  std::vector<double> per_start;
  std::vector<bool> converged;
  FieldPair2D best;
};

namespace detail {

inline FieldPair2D smooth_pair(const FieldPair2D& u, double k0sq) {
  FieldPair2D out(u.grid);
  auto sym = [k0sq](double kx, double ky) {
    return Complex(1.0 / (1.0 + (kx * kx + ky * ky) / k0sq), 0.0);
  };
  out.plus = apply_multiplier(u.plus, u.grid, sym);
  out.minus = apply_multiplier(u.minus, u.grid, sym);
  return out;
}

inline void normalize_mass(FieldPair2D& u, double target) {
  const double m = mass(u);
  if (m <= 0.0) throw UndefinedQuotient("cannot normalise the zero pair");
  u *= Complex(std::sqrt(target / m), 0.0);
}

/// Moves u along the heat flow e^{t Lap} (t of either sign) until
/// |u|^2_{H1dot} / M(u) = kappa, then rescales to unit mass. Nyquist rows
/// carry no derivative on the grid and would let N grow at fixed H, so
/// they are dropped.
inline bool retract(FieldPair2D& u, double kappa) {
  const Grid2D& g = u.grid;
  const auto k = g.derivative_wavenumbers();
  CVector fp = to_fourier(u.plus, g.n), fm = to_fourier(u.minus, g.n);
  std::vector<double> k2(g.size()), pw(g.size());
  double k2max = 0.0;
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const std::size_t j = g.index(ix, iy);
      k2[j] = k[ix] * k[ix] + k[iy] * k[iy];
      if (ix == g.n / 2 || iy == g.n / 2) fp[j] = fm[j] = 0.0;
      pw[j] = std::norm(fp[j]) + std::norm(fm[j]);
      k2max = std::max(k2max, k2[j]);
    }
  // backward heat flow amplifies round-off; cap the gain at e^30
  const double t_min = -30.0 / k2max;
  // f(t) = H/M along the flow is decreasing: Newton inside a bracket
  double t = 0.0, lo = t_min, hi = std::numeric_limits<double>::infinity();
  bool hit = false;
  for (int it = 0; it < 200; ++it) {
    double s0 = 0, s1 = 0, s2 = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double wgt = pw[j] * std::exp(-2.0 * t * k2[j]);
      s0 += wgt;
      s1 += wgt * k2[j];
      s2 += wgt * k2[j] * k2[j];
    }
    const double f = s1 / s0;
    const double var = s2 / s0 - f * f;
    if (std::abs(f - kappa) <= 1e-12 * kappa) {
      hit = true;
      break;
    }
    (f > kappa ? lo : hi) = t;
    double next = var > 0.0 ? t + (std::log(f) - std::log(kappa)) * f / (2.0 * var) : 0.0;
    if (!(var > 0.0) || !(next > lo && next < hi))
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : std::max(2.0 * t, t + 1.0 / kappa);
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(t))) break;
    t = next;
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double f = std::exp(-t * k2[j]);
    fp[j] *= f;
    fm[j] *= f;
  }
  fft_backward(fp, g.n);
  fft_backward(fm, g.n);
  u.plus = std::move(fp);
  u.minus = std::move(fm);
  normalize_mass(u, 1.0);
  return hit;
}

/// Ascent of N on {M = 1, |U|^2_{H1dot} = kappa}. The quotient is scale
/// invariant on the plane, but on a torus it is unbounded along spreading
/// profiles, so the scale has to be pinned.
inline std::pair<double, bool> ascend_quotient(FieldPair2D& u, const Parameters& p,
                                               const CgnOptions& opt, double kappa) {
  const Grid2D& g = u.grid;
  if (!retract(u, kappa)) return {gn_quotient(u, p), false};
  double q = gn_quotient(u, p);
  double tau = 1.0;
  int quiet = 0;
  FieldPair2D prev_u, prev_d;
  bool have_prev = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    FieldPair2D grad(g), c2(g);
    c2.plus = laplacian(u.plus, g);
    c2.minus = laplacian(u.minus, g);
    c2 *= -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = std::norm(u.plus[i]), b = std::norm(u.minus[i]);
      grad.plus[i] = (p.lambda_plus * a + p.lambda_zero * b) * u.plus[i];
      grad.minus[i] = (p.lambda_minus * b + p.lambda_zero * a) * u.minus[i];
    }
    FieldPair2D d = smooth_pair(grad, kappa);
    const FieldPair2D p1 = smooth_pair(u, kappa), p2 = smooth_pair(c2, kappa);
    // remove the normal directions of both constraints
    const double a11 = real_inner(u, p1), a12 = real_inner(u, p2);
    const double a21 = real_inner(c2, p1), a22 = real_inner(c2, p2);
    const double r1 = real_inner(u, d), r2 = real_inner(c2, d);
    const double det = a11 * a22 - a12 * a21;
    const double x1 = (r1 * a22 - a12 * r2) / det, x2 = (a11 * r2 - a21 * r1) / det;
    d.axpy(-x1, p1);
    d.axpy(-x2, p2);
    if (have_prev) {
      FieldPair2D s = u, y = d;
      s.axpy(-1.0, prev_u);
      y.axpy(-1.0, prev_d);
      const double sy = real_inner(s, y), ss = real_inner(s, s);
      if (sy < 0.0) tau = std::clamp(ss / -sy, 1e-6, 1e6);
    }
    prev_u = u;
    prev_d = d;
    have_prev = true;
    double step = tau;
    FieldPair2D trial;
    double qt = q;
    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      trial = u;
      trial.axpy(step, d);
      const bool on = retract(trial, kappa);
      qt = gn_quotient(trial, p);
      if (on && qt >= q) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) return {q, true};  // no ascent left at round-off level
    const double gain = (qt - q) / q;
    u = std::move(trial);
    q = qt;
    quiet = gain < opt.gain_tol ? quiet + 1 : 0;
    if (quiet >= 5) return {q, true};
  }
  return {q, false};
}

}  // namespace detail

/// Initial profiles used by estimate_cgn, in restart order.
inline std::vector<FieldPair2D> cgn_starts(const Grid2D& g, std::uint64_t seed) {
  std::vector<FieldPair2D> out;
  const double w = g.L / 6.0;
  auto gauss = [&](double x, double y, double sx, double sy) {
    return std::exp(-0.5 * (x * x / (sx * sx) + y * y / (sy * sy)));
  };
  FieldPair2D a(g), b(g), c(g), d(g), e(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CVector noise_p(g.size()), noise_m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    noise_p[i] = {nd(rng), nd(rng)};
    noise_m[i] = {nd(rng), nd(rng)};
  }
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix), y = g.coord(iy);
      const std::size_t k = g.index(ix, iy);
      const double gg = gauss(x, y, w, w);
      a.plus[k] = gg;
      b.plus[k] = gg;
      b.minus[k] = 0.6 * gauss(x - 0.3 * w, y, w, w);
      c.plus[k] = gg;
      c.minus[k] = Complex(x, y) / w * gg;
      d.plus[k] = gg * (1.0 + 0.3 * noise_p[k]);
      d.minus[k] = 0.3 * gg * noise_m[k];
      e.plus[k] = gauss(x, y, 1.6 * w, 0.7 * w);
    }
  // the noisy start is low-passed so that it is a smooth profile
  d = detail::smooth_pair(d, 4.0 / (w * w));
  out.push_back(std::move(a));
  out.push_back(std::move(b));
  out.push_back(std::move(c));
  out.push_back(std::move(d));
  out.push_back(std::move(e));
  return out;
}

inline CgnResult estimate_cgn_detailed(const Parameters& p, const Grid2D& g,
                                       const CgnOptions& opt = {}) {
  p.validate();
  g.validate();
  CgnResult res;
  // pinned scale: the width L/6 of the starts, well inside the torus
  const double kappa = 36.0 / (g.L * g.L);
  double best = -1.0;
  bool any = false;
  for (auto& start : cgn_starts(g, opt.seed)) {
    auto [q, ok] = detail::ascend_quotient(start, p, opt, kappa);
    res.per_start.push_back(q);
    res.converged.push_back(ok);
    any = any || ok;
    if (ok && q > best) {
      best = q;
      res.best = start;
    }
  }
  if (!any) throw EstimationFailed("C_GN ascent did not converge from any start", best);
  res.value = best;
  return res;
}

inline double estimate_cgn(const Parameters& p, const Grid2D& g) {
  return estimate_cgn_detailed(p, g).value;
}

/// Coercivity constant matched to eps by Young's inequality.
inline double coercivity_constant(double nu, double eps) { return nu * nu / (16.0 * eps); }

/// E(U) >= (1/4 - eps - C_GN rho) |U|^2_{H1dot} - C_eps rho, rho = M(U).
inline bool coercivity_check(const FieldPair2D& u, const Parameters& p, double eps, double c_eps,
                             double cgn) {
  if (!(eps > 0.0)) throw OutOfRange("eps must be positive");
  const double rho = mass(u);
  const double lhs = energy(u, p).total;
  const double rhs = (0.25 - eps - cgn * rho) * hdot1(u) - c_eps * rho;
  return lhs >= rhs - 1e-13 * (std::abs(lhs) + std::abs(rhs));
}

}  // namespace sov

#endif  // SOV_FUNCTIONAL_HPP
