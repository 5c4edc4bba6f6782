#pragma once

#include <fftw3.h>

#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "grid.hpp"
#include "parallel.hpp"

namespace mfsol {

enum class DiffScheme { spectral, fd4 };

namespace detail {

struct FftwBuffer {
  fftw_complex* p = nullptr;
  std::size_t n = 0;
  explicit FftwBuffer(std::size_t n_) : p(fftw_alloc_complex(n_)), n(n_) {}
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  cd* data() { return reinterpret_cast<cd*>(p); }
};

// Batched 1D transforms of length n, `howmany` lines with given stride/dist.
// Plans are cached; creation is serialized, execution is reentrant.
inline fftw_plan plan_many(int n, int howmany, int stride, int dist, int sign) {
  using Key = std::tuple<int, int, int, int, int>;
  static std::mutex mu;
  static std::map<Key, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mu);
  Key key{n, howmany, stride, dist, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::size_t total = std::size_t(howmany - 1) * dist + std::size_t(n - 1) * stride + 1;
  FftwBuffer tmp(total);
  fftw_plan p = fftw_plan_many_dft(1, &n, howmany, tmp.p, nullptr, stride, dist, tmp.p,
                                   nullptr, stride, dist, sign, FFTW_ESTIMATE);
  cache.emplace(key, p);
  return p;
}

inline void fft_axis(cd* data, const Grid2& g, int axis, int sign) {
  const int n = axis == 0 ? int(g.nx) : int(g.ny);
  const int howmany = axis == 0 ? int(g.ny) : int(g.nx);
  const int stride = axis == 0 ? 1 : int(g.nx);
  const int dist = axis == 0 ? int(g.nx) : 1;
  fftw_plan p = plan_many(n, howmany, stride, dist, sign);
  FftwBuffer buf(g.size());
  std::memcpy(buf.p, data, sizeof(cd) * g.size());
  fftw_execute_dft(p, buf.p, buf.p);
  std::memcpy(data, buf.p, sizeof(cd) * g.size());
}

}  // namespace detail

/// Angular wavenumber of Fourier index m on a periodic axis of n points, length L.
inline double wavenumber(std::size_t m, std::size_t n, double L) {
  long mm = long(m) <= long(n) / 2 ? long(m) : long(m) - long(n);
  return 2.0 * pi * double(mm) / L;
}

inline bool is_nyquist(std::size_t m, std::size_t n) { return n % 2 == 0 && m == n / 2; }

/// Multiplies the spectrum along one periodic axis by symbol(m) (m = Fourier index).
inline CField apply_symbol_axis(const CField& f, int axis,
                                const std::function<cd(std::size_t)>& symbol) {
  const Grid2& g = f.grid;
  CField out = f;
  detail::fft_axis(out.v.data(), g, axis, FFTW_FORWARD);
  const std::size_t n = axis == 0 ? g.nx : g.ny;
  std::vector<cd> s(n);
  for (std::size_t m = 0; m < n; ++m) s[m] = symbol(m) / double(n);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) out(i, j) *= s[axis == 0 ? i : j];
  detail::fft_axis(out.v.data(), g, axis, FFTW_BACKWARD);
  return out;
}

/// Unnormalized 2D forward transform (both axes must be periodic).
inline CField fft2(const CField& f) {
  require(f.grid.periodic_x && f.grid.periodic_y, ErrorKind::invalid_argument,
          "2D transform needs a periodic grid");
  CField out = f;
  detail::fft_axis(out.v.data(), f.grid, 0, FFTW_FORWARD);
  if (!f.grid.is_line()) detail::fft_axis(out.v.data(), f.grid, 1, FFTW_FORWARD);
  return out;
}

/// Inverse of fft2 (normalized).
inline CField ifft2(const CField& F) {
  CField out = F;
  detail::fft_axis(out.v.data(), F.grid, 0, FFTW_BACKWARD);
  if (!F.grid.is_line()) detail::fft_axis(out.v.data(), F.grid, 1, FFTW_BACKWARD);
  const double s = 1.0 / double(F.size());
  for (auto& x : out.v) x *= s;
  return out;
}

/// Solves symbol(kx, ky) * û = f̂ mode by mode; `solve` maps (kx, ky, f̂) to û.
inline CField spectral_solve(const CField& rhs,
                             const std::function<cd(double, double, cd)>& solve) {
  const Grid2& g = rhs.grid;
  CField F = fft2(rhs);
  for (std::size_t j = 0; j < g.ny; ++j) {
    double ky = g.is_line() ? 0.0 : wavenumber(j, g.ny, g.ly);
    for (std::size_t i = 0; i < g.nx; ++i) {
      double kx = wavenumber(i, g.nx, g.lx);
      F(i, j) = solve(kx, ky, F(i, j));
    }
  }
  return ifft2(F);
}

namespace detail {

inline cd spectral_symbol(std::size_t m, std::size_t n, double L, int order) {
  if (order % 2 == 1 && is_nyquist(m, n)) return 0.0;
  return std::pow(I * wavenumber(m, n, L), order);
}

// 4th-order stencils along one axis. Periodic wraps; open uses one-sided closures.
inline void fd4_line(const cd* in, cd* out, std::size_t n, std::ptrdiff_t stride, double h,
                     bool periodic, int order) {
  auto at = [&](std::ptrdiff_t i) {
    if (periodic) i = ((i % std::ptrdiff_t(n)) + std::ptrdiff_t(n)) % std::ptrdiff_t(n);
    return in[i * stride];
  };
  const std::ptrdiff_t N = std::ptrdiff_t(n);
  for (std::ptrdiff_t i = 0; i < N; ++i) {
    cd r;
    bool interior = periodic || (i >= 2 && i < N - 2);
    if (order == 1) {
      if (interior) {
        r = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
      } else if (i == 0) {
        r = (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
      } else if (i == 1) {
        r = (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
      } else if (i == N - 1) {
        r = -(-25.0 * at(N - 1) + 48.0 * at(N - 2) - 36.0 * at(N - 3) + 16.0 * at(N - 4) -
              3.0 * at(N - 5)) / (12.0 * h);
      } else {
        r = -(-3.0 * at(N - 1) - 10.0 * at(N - 2) + 18.0 * at(N - 3) - 6.0 * at(N - 4) +
              at(N - 5)) / (12.0 * h);
      }
    } else {
      const double h2 = 12.0 * h * h;
      if (interior) {
        r = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) / h2;
      } else {
        bool left = i < 2;
        auto a = [&](std::ptrdiff_t k) { return left ? at(k) : at(N - 1 - k); };
        if (i == 0 || i == N - 1)
          r = (45.0 * a(0) - 154.0 * a(1) + 214.0 * a(2) - 156.0 * a(3) + 61.0 * a(4) -
               10.0 * a(5)) / h2;
        else
          r = (10.0 * a(0) - 15.0 * a(1) - 4.0 * a(2) + 14.0 * a(3) - 6.0 * a(4) + a(5)) / h2;
      }
    }
    out[i * stride] = r;
  }
}

inline CField fd4_axis(const CField& f, int axis, int order) {
  const Grid2& g = f.grid;
  CField out(g);
  const bool per = axis == 0 ? g.periodic_x : g.periodic_y;
  const std::size_t n = axis == 0 ? g.nx : g.ny;
  const std::size_t lines = axis == 0 ? g.ny : g.nx;
  const std::ptrdiff_t stride = axis == 0 ? 1 : std::ptrdiff_t(g.nx);
  const double h = axis == 0 ? g.dx() : g.dy();
  parallel_for(lines, [&](std::size_t b, std::size_t e) {
    for (std::size_t l = b; l < e; ++l) {
      std::size_t off = axis == 0 ? l * g.nx : l;
      fd4_line(f.v.data() + off, out.v.data() + off, n, stride, h, per, order);
    }
  }, 8);
  return out;
}

inline CField diff_axis(const CField& f, int axis, int order, DiffScheme scheme) {
  if (order == 0) return f;
  const Grid2& g = f.grid;
  if (axis == 1 && g.is_line()) return CField(g);
  const bool per = axis == 0 ? g.periodic_x : g.periodic_y;
  if (per && scheme == DiffScheme::spectral) {
    const std::size_t n = axis == 0 ? g.nx : g.ny;
    const double L = axis == 0 ? g.lx : g.ly;
    return apply_symbol_axis(f, axis, [&](std::size_t m) { return spectral_symbol(m, n, L, order); });
  }
  CField out = f;
  int left = order;
  while (left > 0) {
    int step = left >= 2 ? 2 : 1;
    out = fd4_axis(out, axis, step);
    left -= step;
  }
  return out;
}

}  // namespace detail

/// Partial derivative ∂x^mx ∂y^my. Periodic axes are spectral unless fd4 is
/// requested; open axes always use the 4th-order stencils.
inline CField diff(const CField& f, int mx, int my, DiffScheme scheme = DiffScheme::spectral) {
  CField out = detail::diff_axis(f, 0, mx, scheme);
  return detail::diff_axis(out, 1, my, scheme);
}

inline RField diff(const RField& f, int mx, int my, DiffScheme scheme = DiffScheme::spectral) {
  return real(diff(to_complex(f), mx, my, scheme));
}

inline RField dx(const RField& f, DiffScheme s = DiffScheme::spectral) { return diff(f, 1, 0, s); }
inline RField dy(const RField& f, DiffScheme s = DiffScheme::spectral) { return diff(f, 0, 1, s); }
inline CField dx(const CField& f, DiffScheme s = DiffScheme::spectral) { return diff(f, 1, 0, s); }
inline CField dy(const CField& f, DiffScheme s = DiffScheme::spectral) { return diff(f, 0, 1, s); }

inline Vec3Field diff(const Vec3Field& v, int mx, int my, DiffScheme s = DiffScheme::spectral) {
  return {diff(v[0], mx, my, s), diff(v[1], mx, my, s), diff(v[2], mx, my, s)};
}
inline Vec3Field dx(const Vec3Field& v, DiffScheme s = DiffScheme::spectral) { return diff(v, 1, 0, s); }
inline Vec3Field dy(const Vec3Field& v, DiffScheme s = DiffScheme::spectral) { return diff(v, 0, 1, s); }

}  // namespace mfsol
