#ifndef SOV_RADIAL_HPP
#define SOV_RADIAL_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <cmath>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <tuple>

#include "sov/core.hpp"
#include "sov/field.hpp"
#include "sov/functional.hpp"
#include "sov/grid.hpp"
#include "sov/solver.hpp"

namespace sov {

/// Radial profiles (v+, v-) carrying windings (m, m+1).
struct RadialPair {
  RadialGrid grid;
  int m = 0;
  CVector v_plus;
  CVector v_minus;
  // Exact r-derivatives when the profile is known in closed form. When
  // present, energy_m uses pointwise formulas instead of differences.
  std::optional<CVector> d_plus;
  std::optional<CVector> d_minus;

  RadialPair() = default;
  RadialPair(const RadialGrid& g, int winding)
      : grid(g), m(winding), v_plus(g.n, Complex{}), v_minus(g.n, Complex{}) {}

  void validate() const {
    if (v_plus.size() != grid.n || v_minus.size() != grid.n)
      throw InvalidField("radial arrays do not conform to the grid");
    if (!all_finite(v_plus) || !all_finite(v_minus)) throw InvalidField("radial pair has non-finite entries");
  }

  RadialPair& operator*=(double s) {
    for (auto& z : v_plus) z *= s;
    for (auto& z : v_minus) z *= s;
    d_plus.reset();
    d_minus.reset();
    return *this;
  }
  void axpy(double a, const RadialPair& o) {
    for (std::size_t j = 0; j < v_plus.size(); ++j) {
      v_plus[j] += a * o.v_plus[j];
      v_minus[j] += a * o.v_minus[j];
    }
    d_plus.reset();
    d_minus.reset();
  }
};

inline double radial_dot(const RadialPair& a, const RadialPair& b) {
  const auto w = a.grid.weights();
  return weighted_dot(a.v_plus, b.v_plus, w).real() + weighted_dot(a.v_minus, b.v_minus, w).real();
}

inline double mass_m(const RadialPair& p) {
  p.validate();
  return radial_dot(p, p);
}

// ---------------------------------------------------------------------------
// Discrete operators on the half-shifted grid. Ghost values: at the origin
// v_{-1} = (-1)^l v_0 (parity of e^{il theta} v(r)), at r_max v_n = -v_{n-1}
// (Dirichlet at the cell face).

struct Tridiag {
  std::vector<double> lo, di, up;  // row j: lo[j] v_{j-1} + di[j] v_j + up[j] v_{j+1}

  explicit Tridiag(std::size_t n = 0) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}

  CVector apply(const CVector& v) const {
    const std::size_t n = di.size();
    CVector out(n);
    for (std::size_t j = 0; j < n; ++j) {
      Complex s = di[j] * v[j];
      if (j > 0) s += lo[j] * v[j - 1];
      if (j + 1 < n) s += up[j] * v[j + 1];
      out[j] = s;
    }
    return out;
  }

  /// Adjoint with respect to sum_j w_j conj(a_j) b_j.
  Tridiag adjoint(const std::vector<double>& w) const {
    const std::size_t n = di.size();
    Tridiag t(n);
    for (std::size_t j = 0; j < n; ++j) {
      t.di[j] = di[j];
      if (j > 0) t.lo[j] = w[j - 1] * up[j - 1] / w[j];
      if (j + 1 < n) t.up[j] = w[j + 1] * lo[j + 1] / w[j];
    }
    return t;
  }
};

inline int parity(int l) { return (l % 2 == 0) ? 1 : -1; }

/// Spin-orbit operator B with V_SO = nu/2 Re<v+, B v->_w. It is the symmetric
/// average of the two forms (v-' + (m+1) v-/r) conj v+ and -(v+' - m v+/r) conj v-
/// with derivatives on faces and face averages, so it needs no ghost at r = 0:
///   (B v)_j = (r_{j+1/2} v_{j+1} - r_{j-1/2} v_{j-1}) / (r_j h) + (2m+1) v_j / r_j.
/// The face at r_max drops out because the odd ghost averages to zero there.
inline Tridiag spin_orbit_operator(const RadialGrid& g, int m) {
  Tridiag t(g.n);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double r = g.r(j);
    t.di[j] = (2.0 * m + 1.0) / r;
    if (j > 0) t.lo[j] = -static_cast<double>(j) / r;
    if (j + 1 < g.n) t.up[j] = static_cast<double>(j + 1) / r;
  }
  return t;
}

/// -1/2 (v'' + v'/r - l^2 v / r^2) as T^dagger T / 2 with the face operator
/// (T v)_{j+1/2} = v' - |l| v / r, which annihilates r^{|l|} near the origin.
/// Rewriting |v'|^2 + l^2 |v|^2 / r^2 this way drops a pure boundary term and
/// keeps the first cell consistent for l != 0. Self-adjoint for weights r_j h.
inline Tridiag kinetic_operator(const RadialGrid& g, int l) {
  Tridiag t(g.n);
  const double h = g.h;
  const double al = std::abs(static_cast<double>(l));
  for (std::size_t j = 0; j < g.n; ++j) {
    const double rf = static_cast<double>(j + 1) * h;  // face r_{j+1/2}
    const double c = 0.5 * al / rf;
    const double wf = 0.5 * rf * h;
    const double a = -1.0 / h - c, b = 1.0 / h - c;
    if (j + 1 < g.n) {
      t.di[j] += wf * a * a;
      t.di[j + 1] += wf * b * b;
      t.up[j] += wf * a * b;
      t.lo[j + 1] += wf * a * b;
    } else {
      t.di[j] += wf * a * (a - b);  // ghost v_n = -v_{n-1}
    }
  }
  for (std::size_t j = 0; j < g.n; ++j) {
    const double w = g.weight(j);
    t.di[j] /= w;
    t.lo[j] /= w;
    t.up[j] /= w;
  }
  return t;
}

/// The discrete linear structure shared by energy, gradient, residual and
/// preconditioner for a given (grid, m).
struct RadialOperators {
  RadialGrid grid;
  int m;
  std::vector<double> w;
  Tridiag kin_plus, kin_minus;
  Tridiag b_op;      // v- -> v+ space
  Tridiag b_adj;     // B^dagger : v+ -> v- space

  RadialOperators(const RadialGrid& g, int winding) : grid(g), m(winding), w(g.weights()) {
    kin_plus = kinetic_operator(g, m);
    kin_minus = kinetic_operator(g, m + 1);
    b_op = spin_orbit_operator(g, m);
    b_adj = b_op.adjoint(w);
  }
};

namespace detail {

inline std::shared_ptr<const RadialOperators> radial_ops(const RadialGrid& g, int m) {
  thread_local std::shared_ptr<const RadialOperators> last;
  if (!last || !(last->grid == g) || last->m != m) last = std::make_shared<RadialOperators>(g, m);
  return last;
}

inline double radial_nonlinear(const RadialPair& p, const Parameters& par, const std::vector<double>& w) {
  CompensatedSum s;
  for (std::size_t j = 0; j < p.grid.n; ++j) {
    const double a = std::norm(p.v_plus[j]), b = std::norm(p.v_minus[j]);
    s.add(w[j] * (par.lambda_plus * a * a + par.lambda_minus * b * b + 2.0 * par.lambda_zero * a * b));
  }
  return 0.25 * s.value();
}

}  // namespace detail

/// Reduced energy E_m. The nonlinear cross term carries 2 lambda_0, which is
/// what the angular integration of the planar N produces.
inline EnergyBreakdown energy_m(const RadialPair& p, const Parameters& par) {
  p.validate();
  const RadialGrid& g = p.grid;
  const auto w = g.weights();
  EnergyBreakdown e;
  if (p.d_plus && p.d_minus) {
    const double m = p.m, m1 = p.m + 1;
    CompensatedSum kin, so;
    for (std::size_t j = 0; j < g.n; ++j) {
      const double r = g.r(j);
      const Complex vp = p.v_plus[j], vm = p.v_minus[j];
      const Complex dp = (*p.d_plus)[j], dm = (*p.d_minus)[j];
      kin.add(w[j] * (std::norm(dp) + m * m * std::norm(vp) / (r * r) + std::norm(dm) +
                      m1 * m1 * std::norm(vm) / (r * r)));
      so.add(w[j] * ((dm + m1 * vm / r) * std::conj(vp) - (dp - m * vp / r) * std::conj(vm)).real());
    }
    e.kinetic = 0.25 * kin.value();
    e.vso = 0.5 * par.nu * so.value();
  } else {
    const auto ops = detail::radial_ops(g, p.m);
    const CVector kp = ops->kin_plus.apply(p.v_plus);
    const CVector km = ops->kin_minus.apply(p.v_minus);
    const CVector bm = ops->b_op.apply(p.v_minus);
    e.kinetic = 0.5 * (weighted_dot(p.v_plus, kp, w).real() + weighted_dot(p.v_minus, km, w).real());
    e.vso = 0.5 * par.nu * weighted_dot(p.v_plus, bm, w).real();
  }
  e.nonlinear = detail::radial_nonlinear(p, par, w);
  e.elin = e.kinetic + e.vso;
  e.total = e.elin - e.nonlinear;
  return e;
}

/// Weighted-L^2 gradient of the discrete E_m.
inline RadialPair gradient_m(const RadialPair& p, const Parameters& par) {
  p.validate();
  const auto ops = detail::radial_ops(p.grid, p.m);
  RadialPair gr(p.grid, p.m);
  const CVector kp = ops->kin_plus.apply(p.v_plus);
  const CVector km = ops->kin_minus.apply(p.v_minus);
  const CVector bm = ops->b_op.apply(p.v_minus);
  const CVector bp = ops->b_adj.apply(p.v_plus);
  for (std::size_t j = 0; j < p.grid.n; ++j) {
    const double a = std::norm(p.v_plus[j]), b = std::norm(p.v_minus[j]);
    gr.v_plus[j] = kp[j] + 0.5 * par.nu * bm[j] -
                   (par.lambda_plus * a + par.lambda_zero * b) * p.v_plus[j];
    gr.v_minus[j] = km[j] + 0.5 * par.nu * bp[j] -
                    (par.lambda_minus * b + par.lambda_zero * a) * p.v_minus[j];
  }
  return gr;
}

/// Weighted L^2 norm of the stationarity residual G + omega v.
inline double se_residual_m(const RadialPair& p, double omega, const Parameters& par) {
  if (!std::isfinite(omega)) throw OutOfRange("omega must be finite");
  RadialPair r = gradient_m(p, par);
  r.axpy(omega, p);
  return std::sqrt(radial_dot(r, r));
}

/// Radial analogue of |U|^2_{H1dot}: int |v'|^2 + l^2 |v|^2 / r^2 r dr.
inline double hdot1_m(const RadialPair& p) {
  Parameters zero_nu;
  const auto e = energy_m(p, zero_nu);
  return 4.0 * e.kinetic;
}

/// Largest |v| over the last decade of radii relative to the peak.
inline double radial_tail_ratio(const RadialPair& p, double decade = 1.0) {
  double tail = 0.0, peak = 0.0;
  for (std::size_t j = 0; j < p.grid.n; ++j) {
    const double a = std::max(std::abs(p.v_plus[j]), std::abs(p.v_minus[j]));
    peak = std::max(peak, a);
    if (p.grid.r(j) >= p.grid.r_max() - decade) tail = std::max(tail, a);
  }
  return peak > 0.0 ? tail / peak : 0.0;
}

// ---------------------------------------------------------------------------
// Preconditioner (H_lin + nu^2/2 + c)^{-1}: the linear Hessian is banded in
// the interleaved ordering (v+_0, v-_0, v+_1, ...), factored once per solve.

class RadialPreconditioner {
 public:
  RadialPreconditioner(const RadialGrid& g, int m, double nu, double c) : n_(g.n) {
    const auto ops = detail::radial_ops(g, m);
    const auto& w = ops->w;
    double shift = 0.5 * nu * nu + c;
    for (int attempt = 0; attempt < 8; ++attempt, shift *= 2.0) {
      std::vector<Eigen::Triplet<double>> trip;
      auto add_rows = [&](const Tridiag& t, std::size_t row_off, std::size_t col_off, double s) {
        for (std::size_t j = 0; j < g.n; ++j) {
          const std::size_t row = 2 * j + row_off;
          // symmetric matrix W * operator
          if (j > 0 && t.lo[j] != 0.0) trip.emplace_back(row, 2 * (j - 1) + col_off, s * w[j] * t.lo[j]);
          if (t.di[j] != 0.0) trip.emplace_back(row, 2 * j + col_off, s * w[j] * t.di[j]);
          if (j + 1 < g.n && t.up[j] != 0.0) trip.emplace_back(row, 2 * (j + 1) + col_off, s * w[j] * t.up[j]);
        }
      };
      add_rows(ops->kin_plus, 0, 0, 1.0);
      add_rows(ops->kin_minus, 1, 1, 1.0);
      add_rows(ops->b_op, 0, 1, 0.5 * nu);
      add_rows(ops->b_adj, 1, 0, 0.5 * nu);
      for (std::size_t j = 0; j < g.n; ++j) {
        trip.emplace_back(2 * j, 2 * j, shift * w[j]);
        trip.emplace_back(2 * j + 1, 2 * j + 1, shift * w[j]);
      }
      Eigen::SparseMatrix<double> a(2 * g.n, 2 * g.n);
      a.setFromTriplets(trip.begin(), trip.end());
      solver_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(a);
      if (solver_->info() == Eigen::Success && (solver_->vectorD().array() > 0.0).all()) {
        w_ = w;
        return;
      }
    }
    throw NumericalFailure("radial preconditioner is not positive definite");
  }

  RadialPair apply(const RadialPair& r) const {
    Eigen::VectorXd re(2 * n_), im(2 * n_);
    for (std::size_t j = 0; j < n_; ++j) {
      re[2 * j] = w_[j] * r.v_plus[j].real();
      im[2 * j] = w_[j] * r.v_plus[j].imag();
      re[2 * j + 1] = w_[j] * r.v_minus[j].real();
      im[2 * j + 1] = w_[j] * r.v_minus[j].imag();
    }
    const Eigen::VectorXd xr = solver_->solve(re);
    const Eigen::VectorXd xi = solver_->solve(im);
    RadialPair out(r.grid, r.m);
    for (std::size_t j = 0; j < n_; ++j) {
      out.v_plus[j] = {xr[2 * j], xi[2 * j]};
      out.v_minus[j] = {xr[2 * j + 1], xi[2 * j + 1]};
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<double> w_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> solver_;
};

// ---------------------------------------------------------------------------

struct SemivortexOptions {
  FlowOptions flow;
  std::optional<RadialPair> seed;  // e.g. a Bessel witness
};

/// Default seed r^{|m|} e^{-r^2}, -r^{|m+1|} e^{-r^2}.
inline RadialPair default_radial_seed(const RadialGrid& g, int m) {
  RadialPair p(g, m);
  for (std::size_t j = 0; j < g.n; ++j) {
    const double r = g.r(j);
    const double e = std::exp(-r * r);
    p.v_plus[j] = std::pow(r, std::abs(m)) * e;
    p.v_minus[j] = -std::pow(r, std::abs(m + 1)) * e;
  }
  return p;
}

inline SolveResult<RadialPair> solve_semivortex(int m, double rho, const Parameters& par,
                                                const RadialGrid& grid,
                                                const SemivortexOptions& opt = {}) {
  par.validate();
  if (!(rho > 0.0)) throw OutOfRange("rho must be positive");
  if (grid.h > 0.1 / par.nu) throw OutOfRange("radial spacing must resolve 1/nu (h <= 1/(10 nu))");
  RadialPair seed = opt.seed ? *opt.seed : default_radial_seed(grid, m);
  if (seed.m != m || !(seed.grid == grid)) throw InvalidField("seed does not match (m, grid)");
  seed.d_plus.reset();
  seed.d_minus.reset();
  const RadialPreconditioner pre(grid, m, par.nu, opt.flow.shift);
  FlowOps<RadialPair> ops;
  ops.energy = [&](const RadialPair& p) { return energy_m(p, par); };
  ops.gradient = [&](const RadialPair& p) { return gradient_m(p, par); };
  ops.precondition = [&](const RadialPair& p) { return pre.apply(p); };
  ops.dot = [](const RadialPair& a, const RadialPair& b) { return radial_dot(a, b); };
  return projected_flow(std::move(seed), rho, ops, opt.flow);
}

/// (E_m(rho), E_m(eta), E_m(rho - eta)) from three independent solves.
inline std::tuple<double, double, double> subadditivity_probe_m(int m, double rho, double eta,
                                                                const Parameters& par,
                                                                const RadialGrid& grid,
                                                                const SemivortexOptions& opt = {}) {
  if (!(eta > 0.0 && eta < rho)) throw OutOfRange("need 0 < eta < rho");
  const double a = solve_semivortex(m, rho, par, grid, opt).energy.total;
  const double b = solve_semivortex(m, eta, par, grid, opt).energy.total;
  const double c = solve_semivortex(m, rho - eta, par, grid, opt).energy.total;
  return {a, b, c};
}

/// Mirror partner (m, v+, v-) -> (-(m+1), -conj v-, conj v+).
inline RadialPair mirror(const RadialPair& p) {
  RadialPair q(p.grid, -(p.m + 1));
  for (std::size_t j = 0; j < p.grid.n; ++j) {
    q.v_plus[j] = -std::conj(p.v_minus[j]);
    q.v_minus[j] = std::conj(p.v_plus[j]);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Lift to the plane: (e^{im theta} v+(r), e^{i(m+1) theta} v-(r)) sampled by
// four-point Lagrange interpolation in r, with parity ghosts at the origin
// and zero beyond r_max.

inline Complex radial_sample(const CVector& v, const RadialGrid& g, int l, double r) {
  if (r >= g.r_max()) return 0.0;
  const double s = r / g.h - 0.5;  // fractional index
  const long j0 = static_cast<long>(std::floor(s));
  const double t = s - static_cast<double>(j0);
  auto at = [&](long j) -> Complex {
    if (j < 0) return static_cast<double>(parity(l)) * v[static_cast<std::size_t>(-j - 1)];
    if (j >= static_cast<long>(g.n)) return -v[static_cast<std::size_t>(2 * static_cast<long>(g.n) - 1 - j)];
    return v[static_cast<std::size_t>(j)];
  };
  const double c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return c0 * at(j0 - 1) + c1 * at(j0) + c2 * at(j0 + 1) + c3 * at(j0 + 2);
}

/// C2 interpolant of a cell-centred profile, extended past r = 0 by parity and
/// past r_max by the odd ghost. Piecewise-Lagrange sampling leaves derivative
/// jumps that the spectral Laplacian picks up on fine 2D grids.
class RadialSpline {
 public:
  RadialSpline(const CVector& v, const RadialGrid& g, int l)
      : r_max_(g.r_max()), re_(make(v, g, l, false)), im_(make(v, g, l, true)) {}
  Complex operator()(double r) const {
    if (r >= r_max_) return 0.0;
    return {re_(r), im_(r)};
  }

 private:
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  static constexpr long kGhost = 8;

  static Spline make(const CVector& v, const RadialGrid& g, int l, bool imag) {
    const long n = static_cast<long>(g.n);
    std::vector<double> y;
    y.reserve(g.n + 2 * kGhost);
    for (long j = -kGhost; j < n + kGhost; ++j) {
      Complex z;
      if (j < 0)
        z = static_cast<double>(parity(l)) * v[static_cast<std::size_t>(-j - 1)];
      else if (j >= n)
        z = j < 2 * n ? -v[static_cast<std::size_t>(2 * n - 1 - j)] : Complex{};
      else
        z = v[static_cast<std::size_t>(j)];
      y.push_back(imag ? z.imag() : z.real());
    }
    return Spline(y.begin(), y.end(), (0.5 - kGhost) * g.h, g.h);
  }

  double r_max_;
  Spline re_, im_;
};

inline FieldPair2D lift_to_2d(const RadialPair& p, const Grid2D& g) {
  p.validate();
  FieldPair2D u(g);
  const RadialSpline sp(p.v_plus, p.grid, p.m), sm(p.v_minus, p.grid, p.m + 1);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix), y = g.coord(iy);
      const double r = std::hypot(x, y);
      const std::size_t k = g.index(ix, iy);
      if (r == 0.0) {
        // radial limit: only winding zero survives at the origin
        u.plus[k] = p.m == 0 ? sp(0.0) : Complex{};
        u.minus[k] = p.m + 1 == 0 ? sm(0.0) : Complex{};
        continue;
      }
      const double th = std::atan2(y, x);
      u.plus[k] = std::polar(1.0, p.m * th) * sp(r);
      u.minus[k] = std::polar(1.0, (p.m + 1) * th) * sm(r);
    }
  u.winding_plus = p.m;
  u.winding_minus = p.m + 1;
  return u;
}

inline void write_profile_csv(std::ostream& os, const RadialPair& p) {
  os << "r,re_plus,im_plus,re_minus,im_minus\n" << std::setprecision(17);
  for (std::size_t j = 0; j < p.grid.n; ++j)
    os << p.grid.r(j) << ',' << p.v_plus[j].real() << ',' << p.v_plus[j].imag() << ','
       << p.v_minus[j].real() << ',' << p.v_minus[j].imag() << '\n';
}

}  // namespace sov

#endif  // SOV_RADIAL_HPP
