#pragma once

#include <optional>

#include "algebra.hpp"

namespace mfsol {

enum class Direction { x, y, t };

/// Connection coefficients of a moving frame. Empty fields mean "not supplied".
struct CurvatureSet {
  RField k, sigma, tau;  // along x
  RField m1, m2, m3;     // along y
  RField w1, w2, w3;     // along t
  int beta = 1;

  bool has(Direction d) const {
    switch (d) {
      case Direction::x: return k.size() && sigma.size() && tau.size();
      case Direction::y: return m1.size() && m2.size() && m3.size();
      case Direction::t: return w1.size() && w2.size() && w3.size();
    }
    return false;
  }
  const Grid2& grid() const { return k.size() ? k.grid : m1.size() ? m1.grid : w1.grid; }
};

/// Rows e1, e2, e3 of the frame, as 3-vector fields. For frames obtained by
/// transport along a periodic x-axis, `monodromy[j]` is the ambient rotation R
/// with e(x + lx) = R e(x) on row j (empty: periodic frame).
struct FrameField {
  Vec3Field e1, e2, e3;
  int beta = 1;
  std::vector<RMat> monodromy;

  const Grid2& grid() const { return e1[0].grid; }
  const Vec3Field& e(int i) const { return i == 0 ? e1 : i == 1 ? e2 : e3; }
  Vec3Field& e(int i) { return i == 0 ? e1 : i == 1 ? e2 : e3; }
  RMat at(std::size_t k) const {
    RMat m(3);
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) m(i, c) = e(i)[c][k];
    return m;
  }
};

/// C_m, D_m or G built from the curvature set; σ ≡ 0 gives the unmodified case.
inline RMatField assemble_connection(const CurvatureSet& s, Direction d) {
  require(s.has(d), ErrorKind::invalid_argument, "curvature fields missing for requested direction");
  const RField *a, *b, *c;  // (0,1), −(0,2), (1,2) slots
  switch (d) {
    case Direction::x: a = &s.k; b = &s.sigma; c = &s.tau; break;
    case Direction::y: a = &s.m3; b = &s.m2; c = &s.m1; break;
    default: a = &s.w3; b = &s.w2; c = &s.w1; break;
  }
  const double beta = s.beta;
  RMatField m(a->grid, 3);
  for (std::size_t k = 0; k < m.size(); ++k) {
    RMat& x = m[k];
    x(0, 1) = (*a)[k];
    x(0, 2) = -(*b)[k];
    x(1, 0) = -beta * (*a)[k];
    x(1, 2) = (*c)[k];
    x(2, 0) = beta * (*b)[k];
    x(2, 1) = -(*c)[k];
  }
  return m;
}

/// P_q − Q_p + [P, Q] pointwise.
template <class T>
MatField<T> zero_curvature_residual(const MatField<T>& P, const MatField<T>& Q,
                                    const MatField<T>& dP_along_q, const MatField<T>& dQ_along_p) {
  check_same(P.grid, Q.grid);
  check_same(P.grid, dP_along_q.grid);
  check_same(P.grid, dQ_along_p.grid);
  require(P.size() == Q.size() && P.dim() == Q.dim() && dP_along_q.dim() == P.dim() &&
              dQ_along_p.dim() == P.dim(),
          ErrorKind::dimension_mismatch, "matrix field shapes differ");
  MatField<T> r(P.grid, P.dim());
  for (std::size_t k = 0; k < P.size(); ++k)
    r[k] = dP_along_q[k] - dQ_along_p[k] + commutator(P[k], Q[k]);
  return r;
}

/// Scalar content of a residual of connection matrices: entries (0,1), −(0,2), (1,2).
struct ScalarTriple {
  RField a, b, c;
  double max_abs() const { return std::max({mfsol::max_abs(a), mfsol::max_abs(b), mfsol::max_abs(c)}); }
};

inline ScalarTriple scalar_components(const RMatField& r) {
  return {r.entry(0, 1), -r.entry(0, 2), r.entry(1, 2)};
}

/// Directly coded compatibility of the x- and y-connections (k, σ, τ; m1..m3).
inline ScalarTriple xy_compatibility(const CurvatureSet& s, DiffScheme sch = DiffScheme::spectral) {
  const double b = s.beta;
  return {dy(s.k, sch) - dx(s.m3, sch) + s.sigma * s.m1 - s.tau * s.m2,
          dy(s.sigma, sch) - dx(s.m2, sch) + s.tau * s.m3 - s.k * s.m1,
          dy(s.tau, sch) - dx(s.m1, sch) + b * (s.k * s.m2 - s.sigma * s.m3)};
}

/// Compatibility of x- and t-connections given time derivatives of (k, σ, τ).
inline ScalarTriple xt_compatibility(const CurvatureSet& s, const RField& kt, const RField& sigmat,
                                     const RField& taut, DiffScheme sch = DiffScheme::spectral) {
  const double b = s.beta;
  return {kt - dx(s.w3, sch) + s.sigma * s.w1 - s.tau * s.w2,
          sigmat - dx(s.w2, sch) + s.tau * s.w3 - s.k * s.w1,
          taut - dx(s.w1, sch) + b * (s.k * s.w2 - s.sigma * s.w3)};
}

/// Compatibility of y- and t-connections given time derivatives of (m1, m2, m3).
inline ScalarTriple yt_compatibility(const CurvatureSet& s, const RField& m1t, const RField& m2t,
                                     const RField& m3t, DiffScheme sch = DiffScheme::spectral) {
  const double b = s.beta;
  return {m1t - dy(s.w1, sch) + b * (s.m3 * s.w2 - s.m2 * s.w3),
          m2t - dy(s.w2, sch) + s.m1 * s.w3 - s.m3 * s.w1,
          m3t - dy(s.w3, sch) + s.m2 * s.w1 - s.m1 * s.w2};
}

// Rotation helpers -----------------------------------------------------------

inline RMat rotation_exp(const std::array<double, 3>& w) {
  double th = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  RMat K(3, {0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0});
  double a = th < 1e-8 ? 1.0 - th * th / 6.0 : std::sin(th) / th;
  double b = th < 1e-8 ? 0.5 - th * th / 24.0 : (1.0 - std::cos(th)) / (th * th);
  return RMat::identity(3) + K * a + (K * K) * b;
}

/// Rotation vector w with exp(skew(w)) = R (principal branch, via quaternion).
inline std::array<double, 3> rotation_log(const RMat& R) {
  double tr = R(0, 0) + R(1, 1) + R(2, 2);
  double qw, qx, qy, qz;
  if (tr > 0) {
    double s = 2.0 * std::sqrt(tr + 1.0);
    qw = 0.25 * s;
    qx = (R(2, 1) - R(1, 2)) / s;
    qy = (R(0, 2) - R(2, 0)) / s;
    qz = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    double s = 2.0 * std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2));
    qw = (R(2, 1) - R(1, 2)) / s;
    qx = 0.25 * s;
    qy = (R(0, 1) + R(1, 0)) / s;
    qz = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) > R(2, 2)) {
    double s = 2.0 * std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2));
    qw = (R(0, 2) - R(2, 0)) / s;
    qx = (R(0, 1) + R(1, 0)) / s;
    qy = 0.25 * s;
    qz = (R(1, 2) + R(2, 1)) / s;
  } else {
    double s = 2.0 * std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1));
    qw = (R(1, 0) - R(0, 1)) / s;
    qx = (R(0, 2) + R(2, 0)) / s;
    qy = (R(1, 2) + R(2, 1)) / s;
    qz = 0.25 * s;
  }
  if (qw < 0) qw = -qw, qx = -qx, qy = -qy, qz = -qz;
  double vn = std::sqrt(qx * qx + qy * qy + qz * qz);
  if (vn < 1e-15) return {0, 0, 0};
  double angle = 2.0 * std::atan2(vn, qw);
  return {angle * qx / vn, angle * qy / vn, angle * qz / vn};
}

inline void gram_schmidt_rows(RMat& m) {
  auto dotr = [&](int a, int b) { return m(a, 0) * m(b, 0) + m(a, 1) * m(b, 1) + m(a, 2) * m(b, 2); };
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) {
      double d = dotr(i, j);
      for (int c = 0; c < 3; ++c) m(i, c) -= d * m(j, c);
    }
    double n = std::sqrt(dotr(i, i));
    for (int c = 0; c < 3; ++c) m(i, c) /= n;
  }
}

// Frame transport along x --------------------------------------------------

namespace detail {

// C sampled at x_i + δ on a periodic axis (band-limited interpolation).
inline RMatField shift_x(const RMatField& C, double delta) {
  const Grid2& g = C.grid;
  RMatField out(g, C.dim());
  for (int i = 0; i < C.dim(); ++i)
    for (int j = 0; j < C.dim(); ++j) {
      CField e = apply_symbol_axis(to_complex(C.entry(i, j)), 0, [&](std::size_t m) -> cd {
        double k = wavenumber(m, g.nx, g.lx);
        return is_nyquist(m, g.nx) ? cd(std::cos(k * delta), 0.0) : std::exp(I * k * delta);
      });
      out.set_entry(i, j, real(e));
    }
  return out;
}

}  // namespace detail

/// Integrates rows' (e1 e2 e3)_x = C (e1 e2 e3) along each grid row from x0,
/// RK4 with `substeps` steps per cell and band-limited interpolation of C.
/// β=+1 frames are re-orthonormalized (Gram–Schmidt, e1 first) after each step.
/// The ambient monodromy of each row is recorded.
inline FrameField integrate_frame_x(const std::vector<RMat>& init_rows, const RMatField& C, int beta,
                                    int substeps = 4) {
  const Grid2& g = C.grid;
  require(g.periodic_x, ErrorKind::invalid_argument, "frame transport needs a periodic x-axis");
  require(init_rows.size() == g.ny || init_rows.size() == 1, ErrorKind::dimension_mismatch,
          "one initial frame per row (or one for all rows)");
  require(beta == 1 || beta == -1, ErrorKind::invalid_argument, "beta must be ±1");
  for (const auto& m : C.v)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        require(std::isfinite(m(i, j)), ErrorKind::invalid_argument, "non-finite connection");
  const double h = g.dx() / substeps;
  std::vector<RMatField> stages;  // C at x_i + m h/2, m = 0..2*substeps-1
  for (int m = 0; m < 2 * substeps; ++m) stages.push_back(m == 0 ? C : detail::shift_x(C, 0.5 * h * m));
  auto Cat = [&](std::size_t i, std::size_t j, int m) -> const RMat& {
    std::size_t ii = (i + std::size_t(m / (2 * substeps))) % g.nx;
    return stages[m % (2 * substeps)][g.index(ii, j)];
  };

  FrameField f{vec3(g), vec3(g), vec3(g), beta, {}};
  f.monodromy.resize(g.ny);
  for (std::size_t j = 0; j < g.ny; ++j) {
    RMat E = init_rows.size() == 1 ? init_rows[0] : init_rows[j];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        require(std::isfinite(E(a, b)), ErrorKind::invalid_argument, "non-finite initial frame");
    const RMat E0 = E;
    for (std::size_t i = 0; i <= g.nx; ++i) {
      if (i < g.nx)
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) f.e(r)[c](i, j) = E(r, c);
      if (i == g.nx) break;
      for (int s = 0; s < substeps; ++s) {
        const RMat& c0 = Cat(i, j, 2 * s);
        const RMat& c1 = Cat(i, j, 2 * s + 1);
        const RMat& c2 = Cat(i, j, 2 * s + 2);
        RMat k1 = c0 * E;
        RMat k2 = c1 * (E + k1 * (0.5 * h));
        RMat k3 = c1 * (E + k2 * (0.5 * h));
        RMat k4 = c2 * (E + k3 * h);
        E = E + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if (beta == 1) gram_schmidt_rows(E);
      }
    }
    if (beta == 1) f.monodromy[j] = transpose(E) * E0;
    else f.monodromy[j] = RMat::identity(3);
  }
  return f;
}

inline FrameField integrate_frame_x(const RMat& init, const RMatField& C, int beta, int substeps = 4) {
  return integrate_frame_x(std::vector<RMat>{init}, C, beta, substeps);
}

namespace detail {

inline std::array<double, 3> row_vec(const Vec3Field& v, std::size_t k) { return {v[0][k], v[1][k], v[2][k]}; }

inline std::array<double, 3> rotate_vec(const RMat& R, const std::array<double, 3>& v) {
  return {R(0, 0) * v[0] + R(0, 1) * v[1] + R(0, 2) * v[2],
          R(1, 0) * v[0] + R(1, 1) * v[1] + R(1, 2) * v[2],
          R(2, 0) * v[0] + R(2, 1) * v[1] + R(2, 2) * v[2]};
}

// x-derivative of a vector field with e(x + lx) = R_j e(x) on row j.
inline Vec3Field dx_quasi_periodic(const Vec3Field& v, const std::vector<RMat>& mono, DiffScheme sch) {
  const Grid2& g = v[0].grid;
  if (mono.empty()) return diff(v, 1, 0, sch);
  Vec3Field tilde = vec3(g);
  std::vector<std::array<double, 3>> w(g.ny);
  for (std::size_t j = 0; j < g.ny; ++j) {
    auto l = rotation_log(mono[j]);
    w[j] = {l[0] / g.lx, l[1] / g.lx, l[2] / g.lx};
    for (std::size_t i = 0; i < g.nx; ++i) {
      double s = -(g.x(i) - g.x0);
      RMat Rm = rotation_exp({w[j][0] * s, w[j][1] * s, w[j][2] * s});
      auto r = rotate_vec(Rm, row_vec(v, g.index(i, j)));
      for (int c = 0; c < 3; ++c) tilde[c](i, j) = r[c];
    }
  }
  Vec3Field dt = diff(tilde, 1, 0, sch);
  Vec3Field out = vec3(g);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      std::size_t k = g.index(i, j);
      double s = g.x(i) - g.x0;
      RMat Rp = rotation_exp({w[j][0] * s, w[j][1] * s, w[j][2] * s});
      auto a = rotate_vec(Rp, row_vec(dt, k));
      auto e = row_vec(v, k);
      // A e with A = skew(w)
      std::array<double, 3> ae{w[j][1] * e[2] - w[j][2] * e[1], w[j][2] * e[0] - w[j][0] * e[2],
                               w[j][0] * e[1] - w[j][1] * e[0]};
      for (int c = 0; c < 3; ++c) out[c][k] = a[c] + ae[c];
    }
  return out;
}

}  // namespace detail

/// Reads k, σ, τ (and m1..m3 when the grid has a y-extent) off a Euclidean frame.
inline CurvatureSet curvatures_from_frame(const FrameField& f, DiffScheme sch = DiffScheme::spectral) {
  if (f.beta != 1)
    throw Error(ErrorKind::unsupported_signature, "projection formulas need beta = +1");
  const Grid2& g = f.grid();
  Vec3Field e1x = detail::dx_quasi_periodic(f.e1, f.monodromy, sch);
  Vec3Field e2x = detail::dx_quasi_periodic(f.e2, f.monodromy, sch);
  CurvatureSet s;
  s.beta = 1;
  s.k = dot(f.e2, e1x);
  s.sigma = -dot(f.e3, e1x);
  s.tau = dot(f.e3, e2x);
  if (!g.is_line()) {
    Vec3Field e1y = diff(f.e1, 0, 1, sch), e2y = diff(f.e2, 0, 1, sch);
    s.m3 = dot(f.e2, e1y);
    s.m2 = -dot(f.e3, e1y);
    s.m1 = dot(f.e3, e2y);
  }
  return s;
}

/// Max over samples of |G − I| for the Gram matrix of (e1, e2, e3), plus |e3 − e1×e2|.
inline double frame_orthonormality_defect(const FrameField& f) {
  double m = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m = std::max(m, max_abs(dot(f.e(a), f.e(b)) - (a == b ? 1.0 : 0.0)));
  return std::max(m, max_abs(cross(f.e1, f.e2) - f.e3));
}

// Topological densities --------------------------------------------------------

inline RField triple_product_density(const Vec3Field& v, DiffScheme sch = DiffScheme::spectral) {
  return dot(v, cross(diff(v, 1, 0, sch), diff(v, 0, 1, sch)));
}

inline double topological_charge(const Vec3Field& v, DiffScheme sch = DiffScheme::spectral) {
  return integrate(triple_product_density(v, sch)) / (4.0 * pi);
}

inline std::array<double, 3> topological_charges(const FrameField& f, DiffScheme sch = DiffScheme::spectral) {
  return {topological_charge(f.e1, sch), topological_charge(f.e2, sch), topological_charge(f.e3, sch)};
}

/// Frame-side triple products minus the curvature combinations they equal, for
/// e3, e2, e1 in turn; vanishes on consistent frames with β = +1.
inline ScalarTriple triple_product_forms(const FrameField& f, const CurvatureSet& s,
                                         DiffScheme sch = DiffScheme::spectral) {
  const double b = s.beta;
  auto tp = [&](const Vec3Field& e) { return dot(e, cross(diff(e, 1, 0, sch), diff(e, 0, 1, sch))); };
  return {dy(s.k, sch) - dx(s.m3, sch) - (1.0 / b) * tp(f.e3),
          dy(s.sigma, sch) - dx(s.m2, sch) - (1.0 / b) * tp(f.e2),
          dy(s.tau, sch) - dx(s.m1, sch) - tp(f.e1)};
}

// Conservation laws ----------------------------------------------------------

/// Time-stacked curvature sets at uniform spacing; centre slice is evaluated.
struct CurvatureTrajectory {
  std::vector<CurvatureSet> slices;
  double dt = 0;
};

namespace detail {

inline RField time_d1(const CurvatureTrajectory& tr, const std::function<RField(const CurvatureSet&)>& f) {
  require(tr.slices.size() >= 5 && tr.slices.size() % 2 == 1, ErrorKind::invalid_argument,
          "conservation residual needs an odd stack of at least 5 slices");
  std::size_t c = tr.slices.size() / 2;
  return (f(tr.slices[c - 2]) - 8.0 * f(tr.slices[c - 1]) + 8.0 * f(tr.slices[c + 1]) - f(tr.slices[c + 2])) *
         (1.0 / (12.0 * tr.dt));
}

}  // namespace detail

/// Local conservation laws that follow from the x/y/t compatibility conditions:
///   (σm1 − τm2)_t − (σω1 − τω2)_y + (m2ω1 − m1ω2)_x
///   (τm3 − km1)_t − (τω3 − kω1)_y + (m1ω3 − m3ω1)_x
///   (km2 − σm3)_t − (kω2 − σω3)_y + (m3ω2 − m2ω3)_x
/// `printed_signs` flips the sign of both flux terms (diagnostic variant).
inline ScalarTriple conservation_residual(const CurvatureTrajectory& tr, DiffScheme sch = DiffScheme::spectral,
                                          bool printed_signs = false) {
  for (const auto& s : tr.slices)
    require(s.has(Direction::x) && s.has(Direction::y) && s.has(Direction::t), ErrorKind::invalid_argument,
            "conservation residual needs k, sigma, tau, m and omega fields");
  const CurvatureSet& s = tr.slices[tr.slices.size() / 2];
  const double sg = printed_signs ? -1.0 : 1.0;
  RField da = detail::time_d1(tr, [](const CurvatureSet& c) { return c.sigma * c.m1 - c.tau * c.m2; });
  RField db = detail::time_d1(tr, [](const CurvatureSet& c) { return c.tau * c.m3 - c.k * c.m1; });
  RField dc = detail::time_d1(tr, [](const CurvatureSet& c) { return c.k * c.m2 - c.sigma * c.m3; });
  return {da - sg * dy(s.sigma * s.w1 - s.tau * s.w2, sch) + sg * dx(s.m2 * s.w1 - s.m1 * s.w2, sch),
          db - sg * dy(s.tau * s.w3 - s.k * s.w1, sch) + sg * dx(s.m1 * s.w3 - s.m3 * s.w1, sch),
          dc - sg * dy(s.k * s.w2 - s.sigma * s.w3, sch) + sg * dx(s.m3 * s.w2 - s.m2 * s.w3, sch)};
}

// Tangent-plane decomposition ------------------------------------------------

struct M0Coefficients {
  RField a12, a13, b12, b13, c12, c13, d2, d3;
};

/// Projects S_t, S_x, S_y on (e2, e3) and solves S_t = d2 S_x + d3 S_y in the plane.
inline M0Coefficients m0_decompose(const Vec3Field& S, const Vec3Field& e2, const Vec3Field& e3,
                                   const Vec3Field& St, const Vec3Field& Sx, const Vec3Field& Sy,
                                   double min_det = 1e-10) {
  check_same(S[0].grid, e2[0].grid);
  M0Coefficients m;
  m.a12 = dot(St, e2);
  m.a13 = dot(St, e3);
  m.b12 = dot(Sx, e2);
  m.b13 = dot(Sx, e3);
  m.c12 = dot(Sy, e2);
  m.c13 = dot(Sy, e3);
  RField det = m.b12 * m.c13 - m.b13 * m.c12;
  for (std::size_t k = 0; k < det.size(); ++k)
    if (std::abs(det[k]) <= min_det)
      throw Error(ErrorKind::degenerate, "tangent vectors S_x, S_y are (nearly) parallel");
  m.d2 = (m.a12 * m.c13 - m.a13 * m.c12) / det;
  m.d3 = (m.b12 * m.a13 - m.b13 * m.a12) / det;
  return m;
}

/// |S_t − a12 e2 − a13 e3| + the same for S_x, S_y, maximised over samples.
inline double m0_reconstruction_residual(const M0Coefficients& m, const Vec3Field& e2, const Vec3Field& e3,
                                         const Vec3Field& St, const Vec3Field& Sx, const Vec3Field& Sy) {
  auto res = [&](const Vec3Field& v, const RField& a, const RField& b) {
    return max_abs(v - (a * e2 + b * e3));
  };
  return std::max({res(St, m.a12, m.a13), res(Sx, m.b12, m.b13), res(Sy, m.c12, m.c13)});
}

}  // namespace mfsol
