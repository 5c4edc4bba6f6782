#pragma once

#include <array>
#include <functional>
#include <initializer_list>
#include <vector>

#include "spectral.hpp"

namespace mfsol {

/// Dense n×n matrix (n ≤ 3) with entries of type T.
template <class T>
class SquareMat {
 public:
  SquareMat() = default;
  explicit SquareMat(int n) : n_(n) {
    require(n >= 1 && n <= 3, ErrorKind::invalid_argument, "matrix dimension must be 1..3");
    a_.fill(T{});
  }
  SquareMat(int n, std::initializer_list<T> rows) : SquareMat(n) {
    require(int(rows.size()) == n * n, ErrorKind::dimension_mismatch, "initializer size");
    int k = 0;
    for (const T& x : rows) {
      (*this)(k / n, k % n) = x;
      ++k;
    }
  }
  static SquareMat identity(int n) {
    SquareMat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int dim() const { return n_; }
  T& operator()(int i, int j) { return a_[i * 3 + j]; }
  const T& operator()(int i, int j) const { return a_[i * 3 + j]; }

  SquareMat& operator+=(const SquareMat& o) {
    same(o);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) += o(i, j);
    return *this;
  }
  SquareMat& operator-=(const SquareMat& o) {
    same(o);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) -= o(i, j);
    return *this;
  }
  SquareMat& operator*=(const T& s) {
    for (auto& x : a_) x *= s;
    return *this;
  }
  friend SquareMat operator+(SquareMat a, const SquareMat& b) { return a += b; }
  friend SquareMat operator-(SquareMat a, const SquareMat& b) { return a -= b; }
  friend SquareMat operator-(SquareMat a) { return a *= T(-1); }
  friend SquareMat operator*(SquareMat a, const T& s) { return a *= s; }
  friend SquareMat operator*(const T& s, SquareMat a) { return a *= s; }
  friend SquareMat operator*(const SquareMat& a, const SquareMat& b) {
    a.same(b);
    SquareMat c(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) {
        T s{};
        for (int k = 0; k < a.n_; ++k) s += a(i, k) * b(k, j);
        c(i, j) = s;
      }
    return c;
  }

  double max_abs() const {
    double m = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m = std::max(m, double(std::abs((*this)(i, j))));
    return m;
  }

  void same(const SquareMat& o) const {
    require(n_ == o.n_, ErrorKind::dimension_mismatch,
            "matrix dimensions " + std::to_string(n_) + " and " + std::to_string(o.n_));
  }

 private:
  int n_ = 0;
  std::array<T, 9> a_{};
};

using CMat = SquareMat<cd>;
using RMat = SquareMat<double>;

template <class T>
SquareMat<T> commutator(const SquareMat<T>& a, const SquareMat<T>& b) {
  return a * b - b * a;
}
template <class T>
SquareMat<T> anticommutator(const SquareMat<T>& a, const SquareMat<T>& b) {
  return a * b + b * a;
}

inline CMat pauli(int j) {
  switch (j) {
    case 0: return CMat::identity(2);
    case 1: return CMat(2, {0.0, 1.0, 1.0, 0.0});
    case 2: return CMat(2, {0.0, -I, I, 0.0});
    case 3: return CMat(2, {1.0, 0.0, 0.0, -1.0});
  }
  throw Error(ErrorKind::invalid_argument, "pauli index must be 0..3");
}

inline RMat transpose(const RMat& a) {
  RMat t(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) t(i, j) = a(j, i);
  return t;
}

// Matrix-valued fields are plain sample vectors sharing a grid.
template <class T>
struct MatField {
  Grid2 grid;
  std::vector<SquareMat<T>> v;
  MatField() = default;
  MatField(const Grid2& g, int n) : grid(g), v(g.size(), SquareMat<T>(n)) {}
  std::size_t size() const { return v.size(); }
  SquareMat<T>& operator[](std::size_t k) { return v[k]; }
  const SquareMat<T>& operator[](std::size_t k) const { return v[k]; }
  int dim() const { return v.empty() ? 0 : v[0].dim(); }

  Field<T> entry(int i, int j) const {
    Field<T> f(grid);
    for (std::size_t k = 0; k < v.size(); ++k) f[k] = v[k](i, j);
    return f;
  }
  void set_entry(int i, int j, const Field<T>& f) {
    check_same(grid, f.grid);
    for (std::size_t k = 0; k < v.size(); ++k) v[k](i, j) = f[k];
  }
  double max_abs() const {
    double m = 0;
    for (const auto& x : v) m = std::max(m, x.max_abs());
    return m;
  }
};

using RMatField = MatField<double>;
using CMatField = MatField<cd>;

/// Entrywise ∂x^mx ∂y^my of a matrix field.
template <class T>
MatField<T> diff(const MatField<T>& m, int mx, int my, DiffScheme s = DiffScheme::spectral) {
  MatField<T> out(m.grid, m.dim());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out.set_entry(i, j, diff(m.entry(i, j), mx, my, s));
  return out;
}

// Hirota bilinear derivatives ------------------------------------------------

struct DOrders {
  int mx = 0, my = 0, mt = 0;
  int total() const { return mx + my + mt; }
};

inline double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

/// Binomial expansion of D_x^mx D_y^my D_t^mt (a∘b). `da(jx,jy,jt)` and
/// `db(...)` return ordinary partial derivatives of a and b.
template <class Deriv>
CField hirota_expand(const DOrders& o, Deriv&& da, Deriv&& db) {
  CField out;
  bool first = true;
  for (int jx = 0; jx <= o.mx; ++jx)
    for (int jy = 0; jy <= o.my; ++jy)
      for (int jt = 0; jt <= o.mt; ++jt) {
        int rest = (o.mx - jx) + (o.my - jy) + (o.mt - jt);
        double c = binomial(o.mx, jx) * binomial(o.my, jy) * binomial(o.mt, jt) *
                   (rest % 2 == 0 ? 1.0 : -1.0);
        CField term = da(jx, jy, jt) * db(o.mx - jx, o.my - jy, o.mt - jt) * c;
        if (first) {
          out = term;
          first = false;
        } else {
          for (std::size_t k = 0; k < out.size(); ++k) out[k] += term[k];
        }
      }
  return out;
}

/// Uniformly spaced time slices of a field; the centre slice is the evaluation time.
struct TimeStack {
  std::vector<CField> slices;
  double dt = 0;
  const CField& centre() const { return slices[slices.size() / 2]; }
};

/// Centred 4th-order time derivative (order 0..2) at the middle slice.
inline CField time_derivative(const TimeStack& s, int order) {
  if (order == 0) return s.centre();
  require(s.slices.size() >= 5 && s.slices.size() % 2 == 1, ErrorKind::invalid_argument,
          "time derivatives need an odd stack of at least 5 slices");
  require(order <= 2, ErrorKind::invalid_argument, "time derivative order above 2");
  const std::size_t c = s.slices.size() / 2;
  const CField &m2 = s.slices[c - 2], &m1 = s.slices[c - 1], &p1 = s.slices[c + 1],
               &p2 = s.slices[c + 2], &z = s.slices[c];
  if (order == 1) return (m2 - 8.0 * m1 + 8.0 * p1 - p2) * (1.0 / (12.0 * s.dt));
  return (-1.0 * m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) * (1.0 / (12.0 * s.dt * s.dt));
}

/// Bilinear derivative of sampled fields. Space derivatives spectral (or FD4 on
/// open axes); time derivatives from the stacks, which must have ≥ 5 slices
/// when mt > 0.
inline CField hirota_D(const DOrders& o, const TimeStack& a, const TimeStack& b,
                       DiffScheme scheme = DiffScheme::spectral) {
  require(o.mt == 0 || (a.slices.size() >= 5 && b.slices.size() >= 5), ErrorKind::invalid_argument,
          "time bilinear derivative requested on a single time slice");
  auto make = [scheme](const TimeStack& s) {
    return [&s, scheme](int jx, int jy, int jt) { return diff(time_derivative(s, jt), jx, jy, scheme); };
  };
  auto da = make(a);
  auto db = make(b);
  std::function<CField(int, int, int)> fa = da, fb = db;
  return hirota_expand(o, fa, fb);
}

inline CField hirota_D(const DOrders& o, const CField& a, const CField& b,
                       DiffScheme scheme = DiffScheme::spectral) {
  require(o.mt == 0, ErrorKind::invalid_argument,
          "time bilinear derivative requested on a single time slice");
  return hirota_D(o, TimeStack{{a}, 0.0}, TimeStack{{b}, 0.0}, scheme);
}

// Periodic antiderivative ----------------------------------------------------

template <class T>
struct Antiderivative {
  Field<T> periodic;       // mean-zero periodic part
  std::vector<T> slope;    // per-row x-mean of the integrand (secular coefficient)

  /// periodic part plus slope·(x − x0)
  Field<T> with_secular() const {
    Field<T> out = periodic;
    const Grid2& g = out.grid;
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) out(i, j) += slope[j] * (g.x(i) - g.x0);
    return out;
  }
};

inline Antiderivative<cd> antiderivative_x_full(const CField& f) {
  const Grid2& g = f.grid;
  require(g.periodic_x, ErrorKind::invalid_argument, "antiderivative needs periodic x");
  Antiderivative<cd> r;
  r.slope.assign(g.ny, cd{});
  for (std::size_t j = 0; j < g.ny; ++j) {
    cd s{};
    for (std::size_t i = 0; i < g.nx; ++i) s += f(i, j);
    r.slope[j] = s / double(g.nx);
  }
  r.periodic = apply_symbol_axis(f, 0, [&](std::size_t m) -> cd {
    if (m == 0 || is_nyquist(m, g.nx)) return 0.0;
    return 1.0 / (I * wavenumber(m, g.nx, g.lx));
  });
  return r;
}

inline Antiderivative<double> antiderivative_x_full(const RField& f) {
  auto c = antiderivative_x_full(to_complex(f));
  Antiderivative<double> r;
  r.periodic = real(c.periodic);
  for (auto s : c.slope) r.slope.push_back(s.real());
  return r;
}

/// Mean-zero periodic ∂x^{-1}; any nonzero row mean is dropped here and
/// available via antiderivative_x_full.
inline CField antiderivative_x(const CField& f) { return antiderivative_x_full(f).periodic; }
inline RField antiderivative_x(const RField& f) { return antiderivative_x_full(f).periodic; }

}  // namespace mfsol
