#ifndef SOV_FIELD_HPP
#define SOV_FIELD_HPP

#include <bit>
#include <climits>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "sov/core.hpp"
#include "sov/grid.hpp"

namespace sov {

/// Two-component state (psi_plus, psi_minus) on a periodic grid.
struct FieldPair2D {
  Grid2D grid;
  CVector plus;
  CVector minus;
  // Angular winding of each component when the pair came from a radial
  // profile. Only used as file metadata.
  std::optional<int> winding_plus;
  std::optional<int> winding_minus;

  FieldPair2D() = default;
  explicit FieldPair2D(const Grid2D& g)
      : grid(g), plus(g.size(), Complex{}), minus(g.size(), Complex{}) {}
  FieldPair2D(const Grid2D& g, CVector p, CVector m)
      : grid(g), plus(std::move(p)), minus(std::move(m)) {
    validate();
  }

  void validate() const {
    if (plus.size() != grid.size() || minus.size() != grid.size())
      throw InvalidField("field arrays do not conform to the grid");
    if (!all_finite(plus) || !all_finite(minus)) throw InvalidField("field has non-finite entries");
  }

  // Pointwise linear algebra used by the solvers.
  FieldPair2D& operator+=(const FieldPair2D& o) {
    for (std::size_t i = 0; i < plus.size(); ++i) {
      plus[i] += o.plus[i];
      minus[i] += o.minus[i];
    }
    return *this;
  }
  FieldPair2D& operator*=(Complex s) {
    for (auto& z : plus) z *= s;
    for (auto& z : minus) z *= s;
    return *this;
  }
  /// this += s * o
  void axpy(Complex s, const FieldPair2D& o) {
    for (std::size_t i = 0; i < plus.size(); ++i) {
      plus[i] += s * o.plus[i];
      minus[i] += s * o.minus[i];
    }
  }
};

/// Re <a, b> over the torus (rectangle rule), both components.
inline double real_inner(const FieldPair2D& a, const FieldPair2D& b) {
  const double c = a.grid.cell();
  return uniform_dot(a.plus, b.plus, c).real() + uniform_dot(a.minus, b.minus, c).real();
}

inline Complex inner(const FieldPair2D& a, const FieldPair2D& b) {
  const double c = a.grid.cell();
  return uniform_dot(a.plus, b.plus, c) + uniform_dot(a.minus, b.minus, c);
}

inline double l2_norm(const FieldPair2D& a) { return std::sqrt(real_inner(a, a)); }

/// Largest modulus on the outermost ring of grid cells relative to the
/// global maximum. Used to certify that truncation to the torus is benign.
inline double boundary_ratio(const FieldPair2D& u) {
  const std::size_t n = u.grid.n;
  double edge = 0.0, peak = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      const std::size_t k = u.grid.index(ix, iy);
      const double a = std::max(std::abs(u.plus[k]), std::abs(u.minus[k]));
      peak = std::max(peak, a);
      if (ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1) edge = std::max(edge, a);
    }
  return peak > 0.0 ? edge / peak : 0.0;
}

// ---------------------------------------------------------------------------
// Binary format: "SOV2", uint32 n, float64 L, int32 winding_plus,
// int32 winding_minus (INT32_MIN = absent), then n*n complex64 values of
// psi_plus followed by psi_minus. Everything little-endian.

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts not supported");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidField("truncated SOV2 stream");
  return v;
}

}  // namespace detail

inline void write_binary(std::ostream& os, const FieldPair2D& u) {
  os.write("SOV2", 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid.n));
  detail::put_le<double>(os, u.grid.L);
  detail::put_le<std::int32_t>(os, u.winding_plus.value_or(INT32_MIN));
  detail::put_le<std::int32_t>(os, u.winding_minus.value_or(INT32_MIN));
  for (const CVector* comp : {&u.plus, &u.minus})
    for (const auto& z : *comp) {
      detail::put_le<float>(os, static_cast<float>(z.real()));
      detail::put_le<float>(os, static_cast<float>(z.imag()));
    }
}

inline FieldPair2D read_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SOV2", 4) != 0) throw InvalidField("not an SOV2 stream");
  const auto n = detail::get_le<std::uint32_t>(is);
  const auto L = detail::get_le<double>(is);
  const auto wp = detail::get_le<std::int32_t>(is);
  const auto wm = detail::get_le<std::int32_t>(is);
  FieldPair2D u(Grid2D(L, n));
  for (CVector* comp : {&u.plus, &u.minus})
    for (auto& z : *comp) {
      const float re = detail::get_le<float>(is);
      const float im = detail::get_le<float>(is);
      z = {re, im};
    }
  if (wp != INT32_MIN) u.winding_plus = wp;
  if (wm != INT32_MIN) u.winding_minus = wm;
  u.validate();
  return u;
}

inline void save_binary(const std::string& path, const FieldPair2D& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  write_binary(os, u);
}

inline FieldPair2D load_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  return read_binary(is);
}

/// CSV with columns x, y, re_plus, im_plus, re_minus, im_minus.
inline void write_csv(std::ostream& os, const FieldPair2D& u) {
  os << "x,y,re_plus,im_plus,re_minus,im_minus\n" << std::setprecision(17);
  for (std::size_t iy = 0; iy < u.grid.n; ++iy)
    for (std::size_t ix = 0; ix < u.grid.n; ++ix) {
      const std::size_t k = u.grid.index(ix, iy);
      os << u.grid.coord(ix) << ',' << u.grid.coord(iy) << ',' << u.plus[k].real() << ','
         << u.plus[k].imag() << ',' << u.minus[k].real() << ',' << u.minus[k].imag() << '\n';
    }
}

}  // namespace sov

#endif  // SOV_FIELD_HPP
