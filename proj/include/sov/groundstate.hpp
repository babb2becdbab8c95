#ifndef SOV_GROUNDSTATE_HPP
#define SOV_GROUNDSTATE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "sov/core.hpp"
#include "sov/field.hpp"
#include "sov/functional.hpp"
#include "sov/mixedmode.hpp"
#include "sov/radial.hpp"
#include "sov/solver.hpp"

namespace sov {

namespace seed {
struct Gaussian {
  double width = 2.0;
};
struct SemiVortex {
  int m = 0;
  std::optional<RadialPair> profile;  // solved on demand when absent
};
struct MixedMode {
  int m = 0;
  double eta = kPi / 4.0;
  std::optional<RadialPair> profile;
};
struct Random {
  std::uint64_t seed = 1;
};
}  // namespace seed

using Seed = std::variant<seed::Gaussian, seed::SemiVortex, seed::MixedMode, seed::Random>;

inline std::string seed_name(const Seed& s) {
  struct V {
    std::string operator()(const seed::Gaussian&) const { return "gaussian"; }
    std::string operator()(const seed::SemiVortex& v) const { return "semivortex(" + std::to_string(v.m) + ")"; }
    std::string operator()(const seed::MixedMode& v) const {
      return "mixedmode(" + std::to_string(v.m) + ")";
    }
    std::string operator()(const seed::Random& v) const { return "random(" + std::to_string(v.seed) + ")"; }
  };
  return std::visit(V{}, s);
}

struct GroundstateOptions {
  FlowOptions flow;
  double radial_h = 0.02;  // spacing for on-demand radial seeds
};

/// Radial profile with the same planar mass: M_2D = 2 pi M_radial.
inline RadialPair radial_seed_profile(int m, double rho, const Parameters& p, const Grid2D& g,
                                      const GroundstateOptions& opt) {
  const RadialGrid rg(g.L, opt.radial_h);
  return solve_semivortex(m, rho / (2.0 * kPi), p, rg).pair;
}

inline FieldPair2D make_seed(const Seed& s, double rho, const Parameters& p, const Grid2D& g,
                             const GroundstateOptions& opt) {
  if (auto* gs = std::get_if<seed::Gaussian>(&s)) {
    FieldPair2D u(g);
    for (std::size_t iy = 0; iy < g.n; ++iy)
      for (std::size_t ix = 0; ix < g.n; ++ix) {
        const double x = g.coord(ix), y = g.coord(iy);
        const double e = std::exp(-0.5 * (x * x + y * y) / (gs->width * gs->width));
        u.plus[g.index(ix, iy)] = e;
        u.minus[g.index(ix, iy)] = 0.5 * e;
      }
    return u;
  }
  if (auto* sv = std::get_if<seed::SemiVortex>(&s)) {
    const RadialPair P = sv->profile ? *sv->profile : radial_seed_profile(sv->m, rho, p, g, opt);
    return lift_to_2d(P, g);
  }
  if (auto* mm = std::get_if<seed::MixedMode>(&s)) {
    const RadialPair P = mm->profile ? *mm->profile : radial_seed_profile(mm->m, rho, p, g, opt);
    return mirror_combination(lift_to_2d(P, g), mm->eta);
  }
  const auto& rs = std::get<seed::Random>(s);
  std::mt19937_64 rng(rs.seed);
  std::normal_distribution<double> nd;
  FieldPair2D u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    u.plus[i] = {nd(rng), nd(rng)};
    u.minus[i] = {nd(rng), nd(rng)};
  }
  u = detail::smooth_pair(u, 1.0);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix), y = g.coord(iy);
      const double env = std::exp(-0.5 * (x * x + y * y) / (0.16 * g.L * g.L));
      u.plus[g.index(ix, iy)] *= env;
      u.minus[g.index(ix, iy)] *= env;
    }
  return u;
}

/// Mode-wise (L(xi) + nu^2/2 + c)^{-1}.
inline FieldPair2D precondition_2d(const FieldPair2D& u, double nu, double c) {
  const Grid2D& g = u.grid;
  CVector fp = to_fourier(u.plus, g.n), fm = to_fourier(u.minus, g.n);
  const auto k = g.derivative_wavenumbers();
  const double s = 0.5 * nu * nu + c;
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const std::size_t j = g.index(ix, iy);
      const double kx = k[ix], ky = k[iy];
      const double k2 = kx * kx + ky * ky;
      const double d = 0.5 * k2 + s;
      const Complex off(ky, kx);  // L_12 / nu
      const double det = d * d - nu * nu * k2;
      const Complex a = fp[j], b = fm[j];
      fp[j] = (d * a - nu * off * b) / det;
      fm[j] = (d * b - nu * std::conj(off) * a) / det;
    }
  fft_backward(fp, g.n);
  fft_backward(fm, g.n);
  FieldPair2D out(g);
  out.plus = std::move(fp);
  out.minus = std::move(fm);
  return out;
}

struct GroundstateResult {
  SolveResult<FieldPair2D> solve;
  std::string seed;
  double boundary_ratio = 0.0;
  bool truncation_warning = false;
};

/// Flow from an explicit initial pair (rescaled to mass rho by the flow).
inline SolveResult<FieldPair2D> solve_groundstate_from(FieldPair2D x, double rho, const Parameters& p,
                                                       const GroundstateOptions& opt = {}) {
  p.validate();
  x.validate();
  if (!(rho > 0.0)) throw OutOfRange("rho must be positive");
  FlowOps<FieldPair2D> ops;
  ops.energy = [&](const FieldPair2D& u) { return energy(u, p); };
  ops.gradient = [&](const FieldPair2D& u) { return energy_gradient(u, p); };
  ops.precondition = [&](const FieldPair2D& u) { return precondition_2d(u, p.nu, opt.flow.shift); };
  ops.dot = [](const FieldPair2D& a, const FieldPair2D& b) { return real_inner(a, b); };
  return projected_flow(std::move(x), rho, ops, opt.flow);
}

inline GroundstateResult solve_groundstate(double rho, const Parameters& p, const Grid2D& g,
                                           const Seed& s, const GroundstateOptions& opt = {}) {
  p.validate();
  g.validate();
  if (!(rho > 0.0)) throw OutOfRange("rho must be positive");
  GroundstateResult out;
  out.solve = solve_groundstate_from(make_seed(s, rho, p, g, opt), rho, p, opt);
  out.seed = seed_name(s);
  out.boundary_ratio = boundary_ratio(out.solve.pair);
  out.truncation_warning = out.boundary_ratio > 1e-10;
  return out;
}

// ---------------------------------------------------------------------------
// Structure classifier: angular harmonics of each component about the
// density centroid, sampled on 64 rays with periodic bilinear interpolation.

enum class Structure { semivortex_like, mixed_like, other };

struct StructureLabel {
  Structure kind = Structure::other;
  int m = 0;             // winding of the dominant (m, m+1) pair
  double fraction = 0.0; // share of the harmonic power explained by the label
  std::string to_string() const {
    switch (kind) {
      case Structure::semivortex_like: return "semivortex_like(" + std::to_string(m) + ")";
      case Structure::mixed_like: return "mixed_like(" + std::to_string(m) + ")";
      default: return "other";
    }
  }
};

namespace detail {

inline Complex sample_periodic(const CVector& f, const Grid2D& g, double x, double y) {
  const double h = g.h();
  const double sx = (x + g.L) / h, sy = (y + g.L) / h;
  const double fx = std::floor(sx), fy = std::floor(sy);
  const double tx = sx - fx, ty = sy - fy;
  const long n = static_cast<long>(g.n);
  auto wrap = [n](long i) { return static_cast<std::size_t>(((i % n) + n) % n); };
  const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
  const Complex f00 = f[g.index(wrap(ix), wrap(iy))], f10 = f[g.index(wrap(ix + 1), wrap(iy))];
  const Complex f01 = f[g.index(wrap(ix), wrap(iy + 1))], f11 = f[g.index(wrap(ix + 1), wrap(iy + 1))];
  return (1 - tx) * (1 - ty) * f00 + tx * (1 - ty) * f10 + (1 - tx) * ty * f01 + tx * ty * f11;
}

}  // namespace detail

inline StructureLabel structure_classifier(const FieldPair2D& u) {
  const double M = mass(u);
  if (M == 0.0) throw InvalidField("structure_classifier needs a nonzero pair");
  const Grid2D& g = u.grid;
  // centroid, computed as the circular mean so periodic wrap-around is harmless
  Complex cx(0.0), cy(0.0);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double rho = std::norm(u.plus[k]) + std::norm(u.minus[k]);
      cx += rho * std::polar(1.0, kPi * g.coord(ix) / g.L);
      cy += rho * std::polar(1.0, kPi * g.coord(iy) / g.L);
    }
  const double x0 = std::abs(cx) > 1e-14 * M ? std::arg(cx) * g.L / kPi : 0.0;
  const double y0 = std::abs(cy) > 1e-14 * M ? std::arg(cy) * g.L / kPi : 0.0;

  constexpr int kRays = 64;
  const double dr = 0.5 * g.h();
  const int n_rings = static_cast<int>(0.95 * g.L / dr);
  std::vector<double> pw_plus(kRays, 0.0), pw_minus(kRays, 0.0);
  std::vector<Complex> ring_p(kRays), ring_m(kRays);
  for (int ir = 1; ir <= n_rings; ++ir) {
    const double r = ir * dr;
    for (int a = 0; a < kRays; ++a) {
      const double th = 2.0 * kPi * a / kRays;
      const double x = x0 + r * std::cos(th), y = y0 + r * std::sin(th);
      ring_p[a] = detail::sample_periodic(u.plus, g, x, y);
      ring_m[a] = detail::sample_periodic(u.minus, g, x, y);
    }
    for (int k = 0; k < kRays; ++k) {
      const int kk = k < kRays / 2 ? k : k - kRays;
      Complex sp(0.0), sm(0.0);
      for (int a = 0; a < kRays; ++a) {
        const Complex e = std::polar(1.0, -2.0 * kPi * kk * a / kRays);
        sp += ring_p[a] * e;
        sm += ring_m[a] * e;
      }
      pw_plus[k] += std::norm(sp) * r;
      pw_minus[k] += std::norm(sm) * r;
    }
  }
  double total = 0.0;
  for (int k = 0; k < kRays; ++k) total += pw_plus[k] + pw_minus[k];
  auto idx = [](int k) { return ((k % kRays) + kRays) % kRays; };
  auto pair_power = [&](int m) { return pw_plus[idx(m)] + pw_minus[idx(m + 1)]; };

  StructureLabel best;
  double best_single = 0.0;
  int best_m = 0;
  for (int m = -kRays / 2 + 1; m < kRays / 2 - 1; ++m)
    if (pair_power(m) > best_single) {
      best_single = pair_power(m);
      best_m = m;
    }
  if (best_single > 0.99 * total) {
    best.kind = Structure::semivortex_like;
    best.m = best_m;
    best.fraction = best_single / total;
    return best;
  }
  double best_mixed = 0.0;
  for (int m = -kRays / 2 + 1; m < kRays / 2 - 1; ++m) {
    const int partner = -(m + 1);
    if (partner == m) continue;
    const double a = pair_power(m), b = pair_power(partner);
    if (a + b > best_mixed && std::min(a, b) > 0.01 * total) {
      best_mixed = a + b;
      best_m = std::max(m, partner);
    }
  }
  if (best_mixed > 0.99 * total) {
    best.kind = Structure::mixed_like;
    best.m = best_m;
    best.fraction = best_mixed / total;
    return best;
  }
  best.kind = Structure::other;
  best.fraction = std::max(best_single, best_mixed) / total;
  return best;
}

// ---------------------------------------------------------------------------

struct ProtocolEntry {
  std::string seed;
  double energy = 0.0;
  double omega = 0.0;
  double residual = 0.0;
  int iterations = 0;
  StructureLabel label;
  bool converged = false;
  std::string failure;
};

struct ProtocolReport {
  std::vector<ProtocolEntry> entries;
  std::size_t best = 0;
  std::optional<FieldPair2D> best_state;
  double semivortex_minus_mixed = std::numeric_limits<double>::quiet_NaN();
};

/// Runs the default seeds {semivortex(0), semivortex(-1), mixedmode(0, pi/4),
/// gaussian} and keeps the lowest energy.
inline ProtocolReport groundstate_protocol(double rho, const Parameters& p, const Grid2D& g,
                                           const GroundstateOptions& opt = {},
                                           std::vector<Seed> seeds = {}) {
  if (seeds.empty())
    seeds = {seed::SemiVortex{0, {}}, seed::SemiVortex{-1, {}}, seed::MixedMode{0, kPi / 4.0, {}},
             seed::Gaussian{}};
  ProtocolReport rep;
  double best_e = std::numeric_limits<double>::infinity();
  double best_sv = best_e, best_mx = best_e;
  for (const auto& s : seeds) {
    ProtocolEntry e;
    e.seed = seed_name(s);
    try {
      auto r = solve_groundstate(rho, p, g, s, opt);
      e.energy = r.solve.energy.total;
      e.omega = r.solve.omega;
      e.residual = r.solve.residual;
      e.iterations = r.solve.iterations;
      e.label = structure_classifier(r.solve.pair);
      e.converged = true;
      if (e.energy < best_e) {
        best_e = e.energy;
        rep.best = rep.entries.size();
        rep.best_state = r.solve.pair;
      }
      if (std::holds_alternative<seed::SemiVortex>(s)) best_sv = std::min(best_sv, e.energy);
      if (std::holds_alternative<seed::MixedMode>(s)) best_mx = std::min(best_mx, e.energy);
    } catch (const NumericalFailure& ex) {
      e.failure = ex.what();
    }
    rep.entries.push_back(std::move(e));
  }
  if (std::isfinite(best_sv) && std::isfinite(best_mx)) rep.semivortex_minus_mixed = best_sv - best_mx;
  return rep;
}

}  // namespace sov

#endif  // SOV_GROUNDSTATE_HPP
