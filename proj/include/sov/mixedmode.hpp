#ifndef SOV_MIXEDMODE_HPP
#define SOV_MIXEDMODE_HPP

#include <cmath>

#include "sov/core.hpp"
#include "sov/field.hpp"
#include "sov/functional.hpp"
#include "sov/radial.hpp"

namespace sov {

/// cos(eta) (a, b) + sin(eta) (-conj b, conj a) for a planar pair (a, b).
/// No structural checks: this is also used to build seeds.
inline FieldPair2D mirror_combination(const FieldPair2D& u, double eta) {
  const double c = std::cos(eta), s = std::sin(eta);
  FieldPair2D f(u.grid);
  for (std::size_t i = 0; i < u.plus.size(); ++i) {
    f.plus[i] = c * u.plus[i] - s * std::conj(u.minus[i]);
    f.minus[i] = c * u.minus[i] + s * std::conj(u.plus[i]);
  }
  return f;
}

/// Mixed mode from a semi-vortex profile; requires lambda+ = lambda- = lambda0.
inline FieldPair2D build_mixed(const RadialPair& P, double eta, const Grid2D& grid, const Parameters& p) {
  if (!p.lambdas_equal()) throw UnequalLambda("mixed mode requires lambda+ = lambda- = lambda0");
  return mirror_combination(lift_to_2d(P, grid), eta);
}

struct MixedReport {
  double eta = 0.0;
  double density_error = 0.0;  // max pointwise | |f|^2 - |phi|^2 |
  double kinetic_density_error = 0.0;
  double rel_kinetic = 0.0, rel_vso = 0.0, rel_nonlinear = 0.0, rel_total = 0.0, rel_mass = 0.0;
  double residual_mixed = 0.0;
  double residual_lifted = 0.0;
  EnergyBreakdown energy;
  double mass = 0.0;
  bool passed = false;
};

/// Compare a mixed mode F against the lifted semi-vortex it was built from.
inline MixedReport verify_mixed(const FieldPair2D& F, const RadialPair& P, double omega,
                                const Parameters& p, double eta = 0.0) {
  if (!p.lambdas_equal()) throw UnequalLambda("mixed mode requires lambda+ = lambda- = lambda0");
  const FieldPair2D L = lift_to_2d(P, F.grid);
  MixedReport r;
  r.eta = eta;
  const Grid2D& g = F.grid;
  const CVector fdp = apply_dpm(F.plus, Sign::plus, g), fdm = apply_dpm(F.minus, Sign::minus, g);
  const CVector ldp = apply_dpm(L.plus, Sign::plus, g), ldm = apply_dpm(L.minus, Sign::minus, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double df = std::norm(F.plus[i]) + std::norm(F.minus[i]);
    const double dl = std::norm(L.plus[i]) + std::norm(L.minus[i]);
    r.density_error = std::max(r.density_error, std::abs(df - dl));
    const double kf = std::norm(fdp[i]) + std::norm(fdm[i]);
    const double kl = std::norm(ldp[i]) + std::norm(ldm[i]);
    r.kinetic_density_error = std::max(r.kinetic_density_error, std::abs(kf - kl));
  }
  const EnergyBreakdown ef = energy(F, p), el = energy(L, p);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  r.rel_kinetic = rel(ef.kinetic, el.kinetic);
  r.rel_vso = rel(ef.vso, el.vso);
  r.rel_nonlinear = rel(ef.nonlinear, el.nonlinear);
  r.rel_total = rel(ef.total, el.total);
  r.mass = mass(F);
  r.rel_mass = rel(r.mass, mass(L));
  r.energy = ef;
  r.residual_mixed = se_residual_2d(F, omega, p);
  r.residual_lifted = se_residual_2d(L, omega, p);
  r.passed = r.density_error <= 1e-12 && r.rel_kinetic <= 1e-10 && r.rel_vso <= 1e-10 &&
             r.rel_nonlinear <= 1e-10 && r.rel_total <= 1e-10 && r.rel_mass <= 1e-10 &&
             r.residual_mixed <= r.residual_lifted + 1e-8;
  return r;
}

}  // namespace sov

#endif  // SOV_MIXEDMODE_HPP
