#ifndef SOV_TESTS_HELPERS_HPP
#define SOV_TESTS_HELPERS_HPP

#include <cmath>
#include <random>

#include "sov/field.hpp"
#include "sov/functional.hpp"

namespace sov::testing {

/// Smooth random pair: white noise low-passed at |k|^2 ~ k0sq, then
/// windowed so it decays well inside the box.
inline FieldPair2D random_pair(const Grid2D& g, std::mt19937_64& rng, double k0sq = 2.0) {
  std::normal_distribution<double> nd;
  FieldPair2D u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    u.plus[i] = {nd(rng), nd(rng)};
    u.minus[i] = {nd(rng), nd(rng)};
  }
  u = detail::smooth_pair(u, k0sq);
  u = detail::smooth_pair(u, k0sq);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix), y = g.coord(iy);
      const double w = std::exp(-(x * x + y * y) / (0.18 * g.L * g.L));
      u.plus[g.index(ix, iy)] *= w;
      u.minus[g.index(ix, iy)] *= w;
    }
  return u;
}

/// (A e^{-|z-z0|^2/(2 w^2)}, c A e^{-|z-z0|^2/(2 w^2)}): mass (1 + |c|^2) A^2 pi w^2.
inline FieldPair2D gaussian_pair(const Grid2D& g, double amp, double w, Complex c = 0.0, double x0 = 0.0,
                                 double y0 = 0.0) {
  FieldPair2D u(g);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix) - x0, y = g.coord(iy) - y0;
      const double e = amp * std::exp(-(x * x + y * y) / (2.0 * w * w));
      u.plus[g.index(ix, iy)] = e;
      u.minus[g.index(ix, iy)] = c * e;
    }
  return u;
}

/// u(. - (sx h, sy h)) on the lattice.
inline FieldPair2D translate(const FieldPair2D& u, long sx, long sy) {
  const Grid2D& g = u.grid;
  const long n = static_cast<long>(g.n);
  FieldPair2D v(g);
  for (long iy = 0; iy < n; ++iy)
    for (long ix = 0; ix < n; ++ix) {
      const std::size_t src = g.index(static_cast<std::size_t>(((ix - sx) % n + n) % n),
                                      static_cast<std::size_t>(((iy - sy) % n + n) % n));
      v.plus[g.index(ix, iy)] = u.plus[src];
      v.minus[g.index(ix, iy)] = u.minus[src];
    }
  return v;
}

inline FieldPair2D phased(FieldPair2D u, double alpha) {
  const Complex f = std::polar(1.0, alpha);
  for (auto& z : u.plus) z *= f;
  for (auto& z : u.minus) z *= f;
  return u;
}

inline double distance(FieldPair2D a, const FieldPair2D& b) {
  a.axpy(-1.0, b);
  return l2_norm(a);
}

}  // namespace sov::testing

#endif  // SOV_TESTS_HELPERS_HPP
