#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "error.hpp"

namespace mfsol {

using cd = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;
inline constexpr cd I{0.0, 1.0};

/// Rectangular tensor grid. Periodic axes sample [x0, x0+lx) with n points;
/// open axes sample [x0, x0+lx] with n points including both ends.
/// A 1D line is a grid with ny == 1.
struct Grid2 {
  std::size_t nx = 0, ny = 0;
  double lx = 0, ly = 0;
  double x0 = 0, y0 = 0;
  bool periodic_x = true, periodic_y = true;

  static Grid2 periodic(std::size_t nx, std::size_t ny, double lx, double ly,
                        double x0 = 0, double y0 = 0) {
    Grid2 g{nx, ny, lx, ly, x0, y0, true, true};
    g.validate();
    return g;
  }
  static Grid2 line(std::size_t nx, double lx, double x0 = 0) {
    Grid2 g{nx, 1, lx, 1.0, x0, 0.0, true, true};
    g.validate();
    return g;
  }
  /// Open in both directions; samples include the far edges.
  static Grid2 patch(std::size_t nx, std::size_t ny, double xa, double xb,
                     double ya, double yb, bool px = false, bool py = false) {
    Grid2 g{nx, ny, xb - xa, yb - ya, xa, ya, px, py};
    g.validate();
    return g;
  }

  void validate() const {
    require(nx >= 8, ErrorKind::invalid_argument, "grid nx must be >= 8");
    require(ny >= 8 || ny == 1, ErrorKind::invalid_argument, "grid ny must be >= 8 (or 1 for a line)");
    require(lx > 0 && ly > 0, ErrorKind::invalid_argument, "grid lengths must be positive");
  }

  bool is_line() const { return ny == 1; }
  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  double dx() const { return periodic_x ? lx / double(nx) : lx / double(nx - 1); }
  double dy() const {
    if (is_line()) return ly;
    return periodic_y ? ly / double(ny) : ly / double(ny - 1);
  }
  double x(std::size_t i) const { return x0 + dx() * double(i); }
  double y(std::size_t j) const { return is_line() ? y0 : y0 + dy() * double(j); }
  double cell_area() const { return dx() * (is_line() ? 1.0 : dy()); }

  bool operator==(const Grid2& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly && x0 == o.x0 &&
           y0 == o.y0 && periodic_x == o.periodic_x && periodic_y == o.periodic_y;
  }
};

template <class T>
struct Field {
  Grid2 grid;
  std::vector<T> v;

  Field() = default;
  explicit Field(const Grid2& g, T init = T{}) : grid(g), v(g.size(), init) {}

  std::size_t size() const { return v.size(); }
  T& operator[](std::size_t k) { return v[k]; }
  const T& operator[](std::size_t k) const { return v[k]; }
  T& operator()(std::size_t i, std::size_t j) { return v[grid.index(i, j)]; }
  const T& operator()(std::size_t i, std::size_t j) const { return v[grid.index(i, j)]; }

  template <class F>
  static Field sample(const Grid2& g, F&& f) {
    Field out(g);
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) out(i, j) = f(g.x(i), g.y(j));
    return out;
  }
};

using RField = Field<double>;
using CField = Field<cd>;
using Vec3Field = std::array<RField, 3>;

inline void check_same(const Grid2& a, const Grid2& b) {
  require(a == b, ErrorKind::dimension_mismatch, "fields live on different grids");
}

template <class T, class F>
auto map(const Field<T>& a, F&& f) {
  Field<decltype(f(a[0]))> out;
  out.grid = a.grid;
  out.v.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = f(a[k]);
  return out;
}

template <class T, class U, class F>
auto zip(const Field<T>& a, const Field<U>& b, F&& f) {
  check_same(a.grid, b.grid);
  Field<decltype(f(a[0], b[0]))> out;
  out.grid = a.grid;
  out.v.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = f(a[k], b[k]);
  return out;
}

#define MFSOL_FIELD_BINOP(op)                                                        \
  template <class T, class U>                                                        \
  auto operator op(const Field<T>& a, const Field<U>& b) {                           \
    return zip(a, b, [](const T& x, const U& y) { return x op y; });                 \
  }                                                                                  \
  template <class T, class S, class = std::enable_if_t<std::is_arithmetic_v<S> ||    \
                                                       std::is_same_v<S, cd>>>       \
  auto operator op(const Field<T>& a, S s) {                                         \
    return map(a, [s](const T& x) { return x op s; });                               \
  }                                                                                  \
  template <class T, class S, class = std::enable_if_t<std::is_arithmetic_v<S> ||    \
                                                       std::is_same_v<S, cd>>>       \
  auto operator op(S s, const Field<T>& a) {                                         \
    return map(a, [s](const T& x) { return s op x; });                               \
  }

MFSOL_FIELD_BINOP(+)
MFSOL_FIELD_BINOP(-)
MFSOL_FIELD_BINOP(*)
MFSOL_FIELD_BINOP(/)
#undef MFSOL_FIELD_BINOP

template <class T>
Field<T> operator-(const Field<T>& a) {
  return map(a, [](const T& x) { return -x; });
}

inline CField to_complex(const RField& a) {
  return map(a, [](double x) { return cd(x, 0.0); });
}
inline RField real(const CField& a) {
  return map(a, [](const cd& x) { return x.real(); });
}
inline RField imag(const CField& a) {
  return map(a, [](const cd& x) { return x.imag(); });
}
inline CField conj(const CField& a) {
  return map(a, [](const cd& x) { return std::conj(x); });
}
inline RField abs(const CField& a) {
  return map(a, [](const cd& x) { return std::abs(x); });
}

template <class T>
double max_abs(const Field<T>& a) {
  double m = 0;
  for (const auto& x : a.v) m = std::max(m, double(std::abs(x)));
  return m;
}

/// Rectangle-rule integral; fixed summation order.
template <class T>
T integrate(const Field<T>& a) {
  T s{};
  for (const auto& x : a.v) s += x;
  return s * a.grid.cell_area();
}

template <class T>
T mean(const Field<T>& a) {
  T s{};
  for (const auto& x : a.v) s += x;
  return s / double(a.size());
}

inline double l2_norm(const CField& a) {
  double s = 0;
  for (const auto& x : a.v) s += std::norm(x);
  return std::sqrt(s * a.grid.cell_area());
}

inline bool all_finite(const CField& a) {
  for (const auto& x : a.v)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}
inline bool all_finite(const RField& a) {
  for (double x : a.v)
    if (!std::isfinite(x)) return false;
  return true;
}

// 3-vector field helpers
inline Vec3Field vec3(const Grid2& g) { return {RField(g), RField(g), RField(g)}; }

template <class F>
Vec3Field sample_vec3(const Grid2& g, F&& f) {
  Vec3Field out = vec3(g);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      std::array<double, 3> s = f(g.x(i), g.y(j));
      for (int c = 0; c < 3; ++c) out[c](i, j) = s[c];
    }
  return out;
}

inline RField dot(const Vec3Field& a, const Vec3Field& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Vec3Field cross(const Vec3Field& a, const Vec3Field& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Vec3Field operator+(const Vec3Field& a, const Vec3Field& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3Field operator-(const Vec3Field& a, const Vec3Field& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3Field operator*(double s, const Vec3Field& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3Field operator*(const RField& s, const Vec3Field& a) {
  return {s * a[0], s * a[1], s * a[2]};
}

inline RField norm(const Vec3Field& a) {
  return map(dot(a, a), [](double x) { return std::sqrt(x); });
}

inline Vec3Field normalized(const Vec3Field& a) {
  RField n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

inline double max_abs(const Vec3Field& a) {
  return std::max({max_abs(a[0]), max_abs(a[1]), max_abs(a[2])});
}

inline bool all_finite(const Vec3Field& a) {
  return all_finite(a[0]) && all_finite(a[1]) && all_finite(a[2]);
}

/// Max over samples of | |a| - 1 |.
inline double unit_norm_defect(const Vec3Field& a) {
  return max_abs(norm(a) - 1.0);
}

}  // namespace mfsol
