#pragma once

#include <random>

#include "grid.hpp"

namespace mfsol::presets {

/// Degree-one map: inverse stereographic image of w = (z − c)/λ · exp(|z − c|²/R²)
/// (R = 0: no taper). Core S = +e_z at z = c, S → −e_z far away.
inline Vec3Field instanton(const Grid2& g, double lambda, double taper = 0.0) {
  const double cx = g.x0 + 0.5 * g.lx, cy = g.y0 + 0.5 * g.ly;
  return sample_vec3(g, [&](double x, double y) -> std::array<double, 3> {
    double X = x - cx, Y = y - cy, r2 = X * X + Y * Y;
    double s = taper > 0 ? std::exp(std::min(r2 / (taper * taper), 600.0)) : 1.0;
    double wr = X / lambda * s, wi = Y / lambda * s;
    double w2 = wr * wr + wi * wi;
    if (!std::isfinite(w2) || w2 > 1e300) return {0.0, 0.0, -1.0};
    double d = 1.0 + w2;
    return {2 * wr / d, 2 * wi / d, (1.0 - w2) / d};
  });
}

/// Planar circle in the (1,2)-plane traversed `winding` times along x.
inline Vec3Field circle(const Grid2& g, int winding = 1) {
  const double kx = 2 * pi * winding / g.lx;
  return sample_vec3(g, [&](double x, double) -> std::array<double, 3> {
    return {std::cos(kx * x), std::sin(kx * x), 0.0};
  });
}

/// Latitude-modulated circle: θ = π/2 + ε cos 2x, φ = x (period 2π in x).
inline Vec3Field modulated_circle(const Grid2& g, double eps) {
  return sample_vec3(g, [&](double x, double) -> std::array<double, 3> {
    double th = 0.5 * pi + eps * std::cos(2 * x);
    return {std::cos(x) * std::sin(th), std::sin(x) * std::sin(th), std::cos(th)};
  });
}

inline Vec3Field constant_spin(const Grid2& g, std::array<double, 3> s = {0.0, 0.0, 1.0}) {
  return sample_vec3(g, [&](double, double) { return s; });
}

inline CField plane_wave(const Grid2& g, cd amp, double p, double r = 0.0) {
  return CField::sample(g, [&](double x, double y) { return amp * std::exp(I * (p * x + r * y)); });
}

/// Smooth random periodic field with modes |m| ≤ mmax along x (and y), fixed seed.
inline RField band_limited(const Grid2& g, int mmax, double amp, unsigned seed, double offset = 0.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int my = g.is_line() ? 0 : mmax;
  std::vector<std::array<double, 4>> modes;
  for (int a = 0; a <= mmax; ++a)
    for (int b = -my; b <= my; ++b) {
      if (a == 0 && b <= 0) continue;
      modes.push_back({double(a), double(b), u(rng), u(rng)});
    }
  return RField::sample(g, [&](double x, double y) {
    double s = offset;
    for (const auto& m : modes) {
      double ph = 2 * pi * (m[0] * (x - g.x0) / g.lx + m[1] * (y - g.y0) / g.ly);
      s += amp * (m[2] * std::cos(ph) + m[3] * std::sin(ph)) / (1.0 + m[0] * m[0] + m[1] * m[1]);
    }
    return s;
  });
}

}  // namespace mfsol::presets
