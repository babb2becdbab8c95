#ifndef SOV_DYNAMICS_HPP
#define SOV_DYNAMICS_HPP

#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "sov/core.hpp"
#include "sov/fft.hpp"
#include "sov/field.hpp"
#include "sov/functional.hpp"

namespace sov {

enum class Scheme { strang, lie };

struct EvolutionConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  int record_every = 100;
  Scheme scheme = Scheme::strang;
  bool backward = false;   // integrate towards negative times
  double blowup_hdot1 = 1e6;
};

struct OrbitDistance {
  double value = 0.0;
  double shift_x = 0.0, shift_y = 0.0;
  double phase = 0.0;
};

struct Diagnostic {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double hdot1 = 0.0;
  std::optional<double> orbit;
};

struct EvolutionResult {
  FieldPair2D final_state;
  std::vector<Diagnostic> diagnostics;
  int steps = 0;
};

using Observer = std::function<void(double, const FieldPair2D&)>;

/// Squared H^1 x H^1 norm with the same (Nyquist-free) wavenumbers as the
/// differential operators.
inline double h1_norm(const FieldPair2D& u) { return std::sqrt(mass(u) + hdot1(u)); }

/// inf over lattice shifts s and phases a of |U - e^{ia} Q(. - s)|_{H1}.
inline OrbitDistance orbit_distance(const FieldPair2D& U, const FieldPair2D& Q) {
  if (!(U.grid == Q.grid)) throw InvalidField("orbit_distance needs both pairs on one grid");
  const Grid2D& g = U.grid;
  const auto k = g.derivative_wavenumbers();
  const CVector up = to_fourier(U.plus, g.n), um = to_fourier(U.minus, g.n);
  const CVector qp = to_fourier(Q.plus, g.n), qm = to_fourier(Q.minus, g.n);
  CVector corr(g.size());
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const std::size_t j = g.index(ix, iy);
      const double w = 1.0 + k[ix] * k[ix] + k[iy] * k[iy];
      corr[j] = w * (std::conj(qp[j]) * up[j] + std::conj(qm[j]) * um[j]);
    }
  fft_backward(corr, g.n);  // corr[s] = sum_k w conj(Qhat) Uhat e^{ik.s} / n^2
  std::size_t best = 0;
  for (std::size_t j = 1; j < g.size(); ++j)
    if (std::abs(corr[j]) > std::abs(corr[best])) best = j;
  const std::size_t sx = best % g.n, sy = best / g.n;
  OrbitDistance out;
  out.phase = std::arg(corr[best]);
  out.shift_x = g.h() * static_cast<double>(sx <= g.n / 2 ? static_cast<long>(sx) : static_cast<long>(sx) - static_cast<long>(g.n));
  out.shift_y = g.h() * static_cast<double>(sy <= g.n / 2 ? static_cast<long>(sy) : static_cast<long>(sy) - static_cast<long>(g.n));
  // direct evaluation of the residual norm for the chosen group element
  FieldPair2D d(g);
  const Complex ph = std::polar(1.0, out.phase);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const std::size_t src = g.index((ix + g.n - sx) % g.n, (iy + g.n - sy) % g.n);
      const std::size_t dst = g.index(ix, iy);
      d.plus[dst] = U.plus[dst] - ph * Q.plus[src];
      d.minus[dst] = U.minus[dst] - ph * Q.minus[src];
    }
  out.value = h1_norm(d);
  return out;
}

namespace detail {

struct LinearPropagator {
  // exp(-i L(xi) t) = e^{-i |xi|^2 t / 2} [cos(nu|xi|t) I - i sin(nu|xi|t) B / |xi|]
  std::vector<Complex> diag, off_pm, off_mp;

  LinearPropagator(const Grid2D& g, double nu, double t) {
    const auto k = g.derivative_wavenumbers();
    diag.resize(g.size());
    off_pm.resize(g.size());
    off_mp.resize(g.size());
    for (std::size_t iy = 0; iy < g.n; ++iy)
      for (std::size_t ix = 0; ix < g.n; ++ix) {
        const std::size_t j = g.index(ix, iy);
        const double kx = k[ix], ky = k[iy];
        const double kk = std::hypot(kx, ky);
        const Complex ph = std::polar(1.0, -0.5 * kk * kk * t);
        const double c = std::cos(nu * kk * t);
        const double s = kk > 0.0 ? std::sin(nu * kk * t) / kk : 0.0;
        diag[j] = ph * c;
        off_pm[j] = ph * Complex(0.0, -s) * Complex(ky, kx);
        off_mp[j] = ph * Complex(0.0, -s) * Complex(ky, -kx);
      }
  }

  void apply(FieldPair2D& u) const {
    const std::size_t n = u.grid.n;
    fft_forward(u.plus, n);
    fft_forward(u.minus, n);
    for (std::size_t j = 0; j < diag.size(); ++j) {
      const Complex a = u.plus[j], b = u.minus[j];
      u.plus[j] = diag[j] * a + off_pm[j] * b;
      u.minus[j] = diag[j] * b + off_mp[j] * a;
    }
    fft_backward(u.plus, n);
    fft_backward(u.minus, n);
  }
};

inline void nonlinear_step(FieldPair2D& u, const Parameters& p, double t) {
  for (std::size_t i = 0; i < u.plus.size(); ++i) {
    const double a = std::norm(u.plus[i]), b = std::norm(u.minus[i]);
    u.plus[i] *= std::polar(1.0, t * (p.lambda_plus * a + p.lambda_zero * b));
    u.minus[i] *= std::polar(1.0, t * (p.lambda_minus * b + p.lambda_zero * a));
  }
}

}  // namespace detail

/// Split-step integration of i dt psi = G(psi). Diagnostics are recorded at
/// t = 0 and every record_every steps (and at the final time).
inline EvolutionResult evolve(const FieldPair2D& U0, const Parameters& p, const EvolutionConfig& cfg,
                              const Observer& observer = {},
                              const FieldPair2D* reference = nullptr) {
  U0.validate();
  if (!(cfg.dt > 0.0) || !(cfg.t_final >= 0.0)) throw OutOfRange("dt must be positive, t_final >= 0");
  if (cfg.record_every < 1) throw OutOfRange("record_every must be >= 1");
  const double steps_real = cfg.t_final / cfg.dt;
  const long steps = std::lround(steps_real);
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
    throw OutOfRange("t_final / dt must be an integer");
  const double dt = cfg.backward ? -cfg.dt : cfg.dt;
  const Grid2D& g = U0.grid;

  EvolutionResult res;
  FieldPair2D u = U0;
  auto record = [&](double t) {
    Diagnostic d;
    d.t = t;
    d.mass = mass(u);
    d.energy = energy(u, p).total;
    d.hdot1 = hdot1(u);
    if (reference) d.orbit = orbit_distance(u, *reference).value;
    if (!std::isfinite(d.hdot1) || std::sqrt(d.hdot1) > cfg.blowup_hdot1)
      throw BlowUpSuspected("H1dot norm exceeded the blow-up guard", t, std::sqrt(d.hdot1));
    res.diagnostics.push_back(d);
    if (observer) observer(t, u);
  };
  record(0.0);
  if (cfg.scheme == Scheme::strang) {
    const detail::LinearPropagator lin(g, p.nu, dt);
    for (long s = 1; s <= steps; ++s) {
      detail::nonlinear_step(u, p, 0.5 * dt);
      lin.apply(u);
      detail::nonlinear_step(u, p, 0.5 * dt);
      if (s % cfg.record_every == 0 || s == steps) record(dt * static_cast<double>(s));
    }
  } else {
    const detail::LinearPropagator lin(g, p.nu, dt);
    for (long s = 1; s <= steps; ++s) {
      detail::nonlinear_step(u, p, dt);
      lin.apply(u);
      if (s % cfg.record_every == 0 || s == steps) record(dt * static_cast<double>(s));
    }
  }
  res.final_state = std::move(u);
  res.steps = static_cast<int>(steps);
  return res;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<Diagnostic>& d) {
  os << "t,mass,energy,hdot1_norm,orbit_distance\n" << std::setprecision(17);
  for (const auto& x : d) {
    os << x.t << ',' << x.mass << ',' << x.energy << ',' << std::sqrt(x.hdot1) << ',';
    if (x.orbit) os << *x.orbit;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

struct ExistenceReport {
  double rho = 0.0;
  double eps = 0.0;
  double c_eps = 0.0;
  double cgn = 0.0;
  double bound = 0.0;       // a-priori bound on |U(t)|^2_{H1dot}
  double max_hdot1 = 0.0;   // largest recorded |U(t)|^2_{H1dot}
  double margin = 0.0;      // 1 - max / bound
  bool holds = false;
  std::vector<Diagnostic> diagnostics;
};

/// Evolves U0 and checks |U(t)|^2_{H1dot} <= (E(U0) + C_eps rho) / (1/4 - eps - C_GN rho)
/// along the flow. eps defaults to min(1/16, (1/4 - C_GN rho)/2).
inline ExistenceReport global_existence_monitor(const FieldPair2D& U0, const Parameters& p,
                                                const EvolutionConfig& cfg, double cgn,
                                                std::optional<double> eps = std::nullopt) {
  ExistenceReport r;
  r.rho = mass(U0);
  r.cgn = cgn;
  if (r.rho == 0.0) {
    r.holds = true;
    return r;
  }
  if (!(r.rho < 0.25 / cgn)) throw OutOfRange("mass is not below 1/(4 C_GN)");
  r.eps = eps.value_or(std::min(1.0 / 16.0, 0.5 * (0.25 - cgn * r.rho)));
  r.c_eps = coercivity_constant(p.nu, r.eps);
  const double denom = 0.25 - r.eps - cgn * r.rho;
  if (!(denom > 0.0)) throw OutOfRange("eps too large for this mass");
  r.bound = (energy(U0, p).total + r.c_eps * r.rho) / denom;
  const auto ev = evolve(U0, p, cfg);
  for (const auto& d : ev.diagnostics) r.max_hdot1 = std::max(r.max_hdot1, d.hdot1);
  r.margin = 1.0 - r.max_hdot1 / r.bound;
  r.holds = r.max_hdot1 <= r.bound;
  r.diagnostics = ev.diagnostics;
  return r;
}

// ---------------------------------------------------------------------------
// Orbital stability experiment.

enum class Perturbation { phase, amplitude, noise };

inline const char* perturbation_name(Perturbation k) {
  switch (k) {
    case Perturbation::phase: return "phase";
    case Perturbation::amplitude: return "amplitude";
    default: return "noise";
  }
}

/// Q perturbed so that |U0 - Q|_{H1} = delta.
inline FieldPair2D perturb(const FieldPair2D& Q, Perturbation kind, double delta, std::uint64_t seed = 7) {
  const Grid2D& g = Q.grid;
  auto diff_norm = [&](const FieldPair2D& U) {
    FieldPair2D d = U;
    d.axpy(-1.0, Q);
    return h1_norm(d);
  };
  if (delta == 0.0) return Q;
  if (kind == Perturbation::amplitude) {
    FieldPair2D U = Q;
    U *= 1.0 + delta / h1_norm(Q);
    return U;
  }
  if (kind == Perturbation::phase) {
    auto make = [&](double eps) {
      FieldPair2D U = Q;
      for (std::size_t iy = 0; iy < g.n; ++iy)
        for (std::size_t ix = 0; ix < g.n; ++ix) {
          const Complex f = std::polar(1.0, eps * std::sin(kPi * g.coord(ix) / g.L));
          U.plus[g.index(ix, iy)] *= f;
          U.minus[g.index(ix, iy)] *= f;
        }
      return U;
    };
    // the map eps -> distance is linear to leading order; a few secant
    // corrections make it exact to round-off
    double e0 = 0.0, d0 = 0.0;
    double e1 = delta / std::max(diff_norm(make(1.0)), 1e-300);
    double d1 = diff_norm(make(e1));
    for (int it = 0; it < 20 && std::abs(d1 - delta) > 1e-14 * delta; ++it) {
      const double e2 = e1 + (delta - d1) * (e1 - e0) / (d1 - d0);
      e0 = e1;
      d0 = d1;
      e1 = e2;
      d1 = diff_norm(make(e1));
    }
    return make(e1);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  FieldPair2D n(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    n.plus[i] = {nd(rng), nd(rng)};
    n.minus[i] = {nd(rng), nd(rng)};
  }
  n = detail::smooth_pair(n, 1.0);
  n = detail::smooth_pair(n, 1.0);
  n *= delta / h1_norm(n);
  FieldPair2D U = Q;
  U += n;
  return U;
}

struct StabilityRun {
  Perturbation kind;
  double delta = 0.0;
  double initial_distance = 0.0;
  double sup_distance = 0.0;
  std::vector<Diagnostic> diagnostics;
};

struct StabilityReport {
  std::vector<StabilityRun> runs;
  double sup_distance = 0.0;
};

inline StabilityReport stability_experiment(const FieldPair2D& Q, const Parameters& p, double delta,
                                            const EvolutionConfig& cfg,
                                            std::vector<Perturbation> kinds = {Perturbation::phase,
                                                                               Perturbation::amplitude,
                                                                               Perturbation::noise}) {
  StabilityReport rep;
  for (auto kind : kinds) {
    StabilityRun run;
    run.kind = kind;
    run.delta = delta;
    const FieldPair2D U0 = perturb(Q, kind, delta);
    run.initial_distance = orbit_distance(U0, Q).value;
    const auto ev = evolve(U0, p, cfg, {}, &Q);
    for (const auto& d : ev.diagnostics) run.sup_distance = std::max(run.sup_distance, *d.orbit);
    run.diagnostics = ev.diagnostics;
    rep.sup_distance = std::max(rep.sup_distance, run.sup_distance);
    rep.runs.push_back(std::move(run));
  }
  return rep;
}

}  // namespace sov

#endif  // SOV_DYNAMICS_HPP
