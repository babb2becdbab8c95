#ifndef SOV_GRID_HPP
#define SOV_GRID_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "sov/core.hpp"

namespace sov {

/// Periodic square grid on [-L, L)^2, n points per axis, x fastest.
struct Grid2D {
  double L = 16.0;
  std::size_t n = 128;

  Grid2D() = default;
  Grid2D(double half_length, std::size_t points) : L(half_length), n(points) { validate(); }

  void validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw OutOfRange("grid half-length must be positive");
    if (n < 4 || (n & (n - 1)) != 0) throw OutOfRange("grid size must be a power of two >= 4");
  }

  double h() const { return 2.0 * L / static_cast<double>(n); }
  double cell() const { return h() * h(); }
  std::size_t size() const { return n * n; }
  double coord(std::size_t i) const { return -L + static_cast<double>(i) * h(); }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * n + ix; }

  /// Angular wavenumber of FFT bin k (signed, Nyquist reported as -n/2).
  double wavenumber(std::size_t k) const {
    const auto s = static_cast<long>(k);
    const long half = static_cast<long>(n / 2);
    const long kk = s < half ? s : s - static_cast<long>(n);
    return kPi / L * static_cast<double>(kk);
  }

  /// Wavenumber used by first-derivative multipliers. The Nyquist bin is
  /// dropped so that odd derivatives of real fields stay real.
  double derivative_wavenumber(std::size_t k) const {
    return k == n / 2 ? 0.0 : wavenumber(k);
  }

  std::vector<double> derivative_wavenumbers() const {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = derivative_wavenumber(k);
    return out;
  }

  bool operator==(const Grid2D& o) const { return L == o.L && n == o.n; }
};

/// Half-shifted radial grid r_j = (j + 1/2) h, j = 0..n-1. The Dirichlet
/// point sits at r_max = n h, midway to the first ghost.
struct RadialGrid {
  double h = 0.02;
  std::size_t n = 800;

  RadialGrid() = default;
  RadialGrid(double r_max, double spacing) : h(spacing) {
    if (!(r_max > 0.0) || !(spacing > 0.0)) throw OutOfRange("radial grid needs r_max > 0, h > 0");
    n = static_cast<std::size_t>(std::llround(r_max / spacing));
    if (n < 8) throw GridTooSmall("radial grid needs at least 8 points");
  }

  double r(std::size_t j) const { return (static_cast<double>(j) + 0.5) * h; }
  double weight(std::size_t j) const { return r(j) * h; }
  double r_max() const { return static_cast<double>(n) * h; }

  std::vector<double> nodes() const {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = r(j);
    return out;
  }
  std::vector<double> weights() const {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = weight(j);
    return out;
  }

  bool operator==(const RadialGrid& o) const { return h == o.h && n == o.n; }
};

}  // namespace sov

#endif  // SOV_GRID_HPP
