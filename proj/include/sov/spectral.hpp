#ifndef SOV_SPECTRAL_HPP
#define SOV_SPECTRAL_HPP

#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "sov/bessel.hpp"
#include "sov/core.hpp"
#include "sov/field.hpp"
#include "sov/functional.hpp"

namespace sov {

using Mat2 = std::array<Complex, 4>;  // row-major 2x2

inline Mat2 mat_mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}
inline Mat2 mat_adj(const Mat2& a) {
  return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

struct SymbolEval {
  double xi_x = 0.0, xi_y = 0.0;
  Mat2 matrix{};
  double branch_plus = 0.0;   // |xi|^2/2 + nu |xi|
  double branch_minus = 0.0;  // |xi|^2/2 - nu |xi|
  Mat2 unitary{};             // columns: eigenvectors for (plus, minus)
};

/// L(xi) = |xi|^2/2 I + nu [[0, i(xi_x - i xi_y)], [-i(xi_x + i xi_y), 0]].
/// The eigenvector matrix is scaled by 1/sqrt(2) so that it is unitary.
inline SymbolEval symbol(double xi_x, double xi_y, double nu) {
  const double k = std::hypot(xi_x, xi_y);
  if (k == 0.0) throw DegenerateFrequency("symbol diagonalisation undefined at xi = 0");
  SymbolEval s;
  s.xi_x = xi_x;
  s.xi_y = xi_y;
  const double d = 0.5 * k * k;
  const Complex z(xi_x, -xi_y);
  const Complex i(0.0, 1.0);
  s.matrix = {d, nu * i * z, -nu * i * std::conj(z), d};
  s.branch_plus = d + nu * k;
  s.branch_minus = d - nu * k;
  const double c = 1.0 / (std::sqrt(2.0) * k);
  s.unitary = {c * i * z, c * k, c * k, c * i * std::conj(z)};
  return s;
}

struct SpectrumBottom {
  double value = 0.0;
  double scan_min = 0.0;
  double scan_argmin = 0.0;
};

/// -nu^2/2, confirmed by a 10^4-point scan of the lower branch on (0, 4 nu].
inline SpectrumBottom spectrum_bottom(double nu) {
  if (!(nu > 0.0)) throw OutOfRange("nu must be positive");
  SpectrumBottom out;
  out.value = -0.5 * nu * nu;
  out.scan_min = std::numeric_limits<double>::infinity();
  constexpr int kScan = 10000;
  for (int i = 1; i <= kScan; ++i) {
    const double k = 4.0 * nu * i / kScan;
    const double b = 0.5 * k * k - nu * k;
    if (b < out.scan_min) {
      out.scan_min = b;
      out.scan_argmin = k;
    }
  }
  if (std::abs(out.scan_min - out.value) > 1e-12 * std::max(1.0, std::abs(out.value)))
    throw NumericalFailure("spectrum scan disagrees with -nu^2/2");
  return out;
}

/// Planar wave (1, +-|k|/(i k_x + k_y)) e^{i k.z}; k must be a non-Nyquist
/// lattice frequency of the grid.
inline FieldPair2D resonance_wave(double kx, double ky, Sign branch, const Grid2D& g) {
  const double unit = kPi / g.L;
  const double jx = kx / unit, jy = ky / unit;
  const double half = static_cast<double>(g.n / 2);
  auto on_lattice = [&](double j) {
    return std::abs(j - std::round(j)) <= 1e-9 && std::abs(std::round(j)) < half;
  };
  if (!on_lattice(jx) || !on_lattice(jy)) throw OutOfRange("frequency is not on the grid lattice");
  const double k = std::hypot(kx, ky);
  if (k == 0.0) throw DegenerateFrequency("resonance wave needs k != 0");
  const Complex c = (branch == Sign::plus ? 1.0 : -1.0) * k / Complex(ky, kx);
  FieldPair2D u(g);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const Complex e = std::polar(1.0, kx * g.coord(ix) + ky * g.coord(iy));
      u.plus[g.index(ix, iy)] = e;
      u.minus[g.index(ix, iy)] = c * e;
    }
  return u;
}

inline FieldPair2D apply_linear_operator(const FieldPair2D& u, double nu) {
  return linear_operator(u, nu);
}

/// |L u - lambda u| / |u|.
inline double eigen_residual(const FieldPair2D& u, double lambda, double nu) {
  FieldPair2D r = apply_linear_operator(u, nu);
  r.axpy(-lambda, u);
  return l2_norm(r) / l2_norm(u);
}

struct JacobiAngerResult {
  double plane_error = 0.0;      // scalar expansion vs e^{i nu r cos(theta - phi)}
  double regrouped_error = 0.0;  // semi-vortex regrouping vs (1, i e^{i phi}) plane wave
};

/// Truncated expansion sum_{|m| <= terms} i^m e^{im(theta - phi)} J_m(nu r)
/// against the exponential on a polar sample set of radius r_max.
inline JacobiAngerResult jacobi_anger_check(double nu, double phi, double r_max, int terms) {
  if (terms < nu * r_max + 20.0) throw OutOfRange("jacobi_anger_check needs terms >= nu r_max + 20");
  if (terms + 1 > kBesselMaxOrder) throw OutOfRange("too many terms for bessel_j");
  JacobiAngerResult out;
  const Complex i(0.0, 1.0);
  constexpr int kAngles = 32;
  const int n_r = static_cast<int>(std::ceil(r_max / 0.25));
  for (int ir = 0; ir <= n_r; ++ir) {
    const double r = std::min(r_max, 0.25 * ir);
    std::vector<double> jm(terms + 2);
    for (int m = 0; m <= terms + 1; ++m) jm[m] = bessel_j(m, nu * r);
    auto J = [&](int m) { return (m < 0 && (-m) % 2) ? -jm[-m] : jm[std::abs(m)]; };
    for (int ia = 0; ia < kAngles; ++ia) {
      const double th = 2.0 * kPi * ia / kAngles;
      const Complex exact = std::polar(1.0, nu * r * std::cos(th - phi));
      Complex s(0.0), s_plus(0.0), s_minus(0.0);
      for (int m = -terms; m <= terms; ++m) {
        static const Complex powers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        const Complex im = powers[((m % 4) + 4) % 4];
        s += im * std::polar(1.0, m * (th - phi)) * J(m);
        const Complex w = im * std::polar(1.0, -m * phi);
        s_plus += w * std::polar(1.0, m * th) * J(m);
        s_minus -= w * std::polar(1.0, (m + 1) * th) * J(m + 1);
      }
      out.plane_error = std::max(out.plane_error, std::abs(s - exact));
      out.regrouped_error = std::max(out.regrouped_error, std::abs(s_plus - exact));
      out.regrouped_error =
          std::max(out.regrouped_error, std::abs(s_minus - i * std::polar(1.0, phi) * exact));
    }
  }
  return out;
}

/// Dispersion surface on the grid's frequency lattice: xi_x, xi_y, branch+, branch-.
inline void write_dispersion_csv(std::ostream& os, const Grid2D& g, double nu) {
  os << "xi_x,xi_y,branch_plus,branch_minus\n" << std::setprecision(17);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double kx = g.wavenumber((ix + g.n / 2) % g.n), ky = g.wavenumber((iy + g.n / 2) % g.n);
      const double k = std::hypot(kx, ky);
      os << kx << ',' << ky << ',' << 0.5 * k * k + nu * k << ',' << 0.5 * k * k - nu * k << '\n';
    }
}

}  // namespace sov

#endif  // SOV_SPECTRAL_HPP
