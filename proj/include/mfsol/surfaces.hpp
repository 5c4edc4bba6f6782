#pragma once

#include "solvers.hpp"

namespace mfsol {

/// r(x, y) = periodic part + drift[0]·x + drift[1]·y; lets graphs and
/// cylinders live on periodic axes.
using Drift = std::array<std::array<double, 3>, 2>;

struct SurfacePatch {
  Vec3Field r, rx, ry, rxx, rxy, ryy, n;
  RField E, F, G, L, M, N, Lambda;
  DiffScheme scheme = DiffScheme::spectral;
  Drift drift{};

  const Grid2& grid() const { return r[0].grid; }
};

namespace detail {

inline Vec3Field add_const(Vec3Field v, const std::array<double, 3>& c) {
  for (int i = 0; i < 3; ++i)
    for (auto& x : v[i].v) x += c[i];
  return v;
}

// Components (c1, c2, c3) of V in the basis (r_x, r_y, n).
inline std::array<RField, 3> decompose(const SurfacePatch& s, const Vec3Field& V) {
  RField a = dot(V, s.rx), b = dot(V, s.ry);
  return {(s.G * a - s.F * b) / s.Lambda, (s.E * b - s.F * a) / s.Lambda, dot(V, s.n)};
}

}  // namespace detail

/// First and second fundamental forms with n = r_x × r_y / |r_x × r_y|.
inline SurfacePatch fundamental_forms(const Vec3Field& r, DiffScheme sch = DiffScheme::spectral,
                                      const Drift& drift = {}, double min_lambda = 1e-10) {
  SurfacePatch s;
  s.r = r;
  s.scheme = sch;
  s.drift = drift;
  s.rx = detail::add_const(diff(r, 1, 0, sch), drift[0]);
  s.ry = detail::add_const(diff(r, 0, 1, sch), drift[1]);
  s.rxx = diff(r, 2, 0, sch);
  s.rxy = diff(r, 1, 1, sch);
  s.ryy = diff(r, 0, 2, sch);
  s.E = dot(s.rx, s.rx);
  s.F = dot(s.rx, s.ry);
  s.G = dot(s.ry, s.ry);
  s.Lambda = s.E * s.G - s.F * s.F;
  for (double v : s.Lambda.v)
    if (!(v > min_lambda)) throw Error(ErrorKind::degenerate, "degenerate immersion: EG - F^2 vanishes");
  s.n = normalized(cross(s.rx, s.ry));
  s.L = dot(s.rxx, s.n);
  s.M = dot(s.rxy, s.n);
  s.N = dot(s.ryy, s.n);
  return s;
}

inline RField gaussian_curvature(const SurfacePatch& s) { return (s.L * s.N - s.M * s.M) / s.Lambda; }

/// Eigenvalues of the second form relative to the first (min, max).
inline std::array<RField, 2> principal_curvatures(const SurfacePatch& s) {
  RField K = gaussian_curvature(s);
  RField H = (s.E * s.N - 2.0 * s.F * s.M + s.G * s.L) / (2.0 * s.Lambda);
  RField d = map(H * H - K, [](double x) { return std::sqrt(std::max(x, 0.0)); });
  return {H - d, H + d};
}

struct GaussWeingarten {
  // Γ^k_ij as G<k><i><j>; p_ij from n_x = p11 r_x + p12 r_y, n_y = p21 r_x + p22 r_y
  RField G111, G211, G112, G212, G122, G222;
  RField p11, p12, p21, p22;
};

inline GaussWeingarten christoffels_and_weingarten(const SurfacePatch& s) {
  auto xx = detail::decompose(s, s.rxx), xy = detail::decompose(s, s.rxy), yy = detail::decompose(s, s.ryy);
  GaussWeingarten w{xx[0], xx[1], xy[0], xy[1], yy[0], yy[1], {}, {}, {}, {}};
  // Gram system with right-hand sides (−L, −M) and (−M, −N)
  w.p11 = (-1.0 * s.G * s.L + s.F * s.M) / s.Lambda;
  w.p12 = (-1.0 * s.E * s.M + s.F * s.L) / s.Lambda;
  w.p21 = (-1.0 * s.G * s.M + s.F * s.N) / s.Lambda;
  w.p22 = (-1.0 * s.E * s.N + s.F * s.M) / s.Lambda;
  return w;
}

/// Max residual of the Gauss–Weingarten relations for r_xx, r_xy, r_yy, n_x, n_y.
inline double gauss_weingarten_residual(const SurfacePatch& s, const GaussWeingarten& w) {
  Vec3Field nx = diff(s.n, 1, 0, s.scheme), ny = diff(s.n, 0, 1, s.scheme);
  double r = 0;
  r = std::max(r, max_abs(s.rxx - (w.G111 * s.rx + w.G211 * s.ry + s.L * s.n)));
  r = std::max(r, max_abs(s.rxy - (w.G112 * s.rx + w.G212 * s.ry + s.M * s.n)));
  r = std::max(r, max_abs(s.ryy - (w.G122 * s.rx + w.G222 * s.ry + s.N * s.n)));
  r = std::max(r, max_abs(nx - (w.p11 * s.rx + w.p12 * s.ry)));
  r = std::max(r, max_abs(ny - (w.p21 * s.rx + w.p22 * s.ry)));
  return r;
}

/// Uniform time slices of a moving patch; evaluation at the centre slice.
struct SurfaceMotion {
  std::vector<SurfacePatch> slices;
  double dt = 0;
  const SurfacePatch& centre() const { return slices[slices.size() / 2]; }
};

struct TimeChristoffels {
  // rows of C: r_tx = (G101, G201, G301), r_ty = (G102, G202, G302), n_t = (G103, G203, 0)
  RField G101, G201, G301, G102, G202, G302, G103, G203;
};

namespace detail {

inline Vec3Field time_derivative_vec(const std::vector<Vec3Field>& slices, double dt) {
  Vec3Field out;
  for (int c = 0; c < 3; ++c) {
    TimeStack st;
    st.dt = dt;
    for (const auto& s : slices) st.slices.push_back(to_complex(s[c]));
    out[c] = real(time_derivative(st, 1));
  }
  return out;
}

inline void require_motion(const SurfaceMotion& m) {
  require(m.slices.size() >= 5 && m.slices.size() % 2 == 1 && m.dt > 0, ErrorKind::invalid_argument,
          "motion needs an odd stack of at least 5 slices");
  for (const auto& s : m.slices) check_same(s.grid(), m.centre().grid());
}

}  // namespace detail

inline TimeChristoffels time_christoffels(const SurfaceMotion& m) {
  detail::require_motion(m);
  std::vector<Vec3Field> rs;
  for (const auto& s : m.slices) rs.push_back(s.r);
  const SurfacePatch& s = m.centre();
  Vec3Field rt = detail::time_derivative_vec(rs, m.dt);
  auto a = detail::decompose(s, diff(rt, 1, 0, s.scheme));
  auto b = detail::decompose(s, diff(rt, 0, 1, s.scheme));
  // n_t·r_x = −Γ³01, n_t·r_y = −Γ³02
  RField u = -1.0 * a[2], v = -1.0 * b[2];
  return {a[0], a[1], a[2], b[0], b[1], b[2], (s.G * u - s.F * v) / s.Lambda, (s.E * v - s.F * u) / s.Lambda};
}

struct ABC {
  RMatField A, B, C;  // C empty for a static patch
};

inline ABC assemble_ABC(const SurfacePatch& s, const GaussWeingarten& w,
                        const TimeChristoffels* tc = nullptr) {
  const Grid2& g = s.grid();
  ABC m{RMatField(g, 3), RMatField(g, 3), {}};
  for (std::size_t k = 0; k < g.size(); ++k) {
    m.A[k] = RMat(3, {w.G111[k], w.G211[k], s.L[k], w.G112[k], w.G212[k], s.M[k], w.p11[k], w.p12[k], 0.0});
    m.B[k] = RMat(3, {w.G112[k], w.G212[k], s.M[k], w.G122[k], w.G222[k], s.N[k], w.p21[k], w.p22[k], 0.0});
  }
  if (tc) {
    m.C = RMatField(g, 3);
    for (std::size_t k = 0; k < g.size(); ++k)
      m.C[k] = RMat(3, {tc->G101[k], tc->G201[k], tc->G301[k], tc->G102[k], tc->G202[k], tc->G302[k],
                        tc->G103[k], tc->G203[k], 0.0});
  }
  return m;
}

/// A_y − B_x + [A, B] (the Codazzi–Mainardi–Peterson system).
inline RMatField codazzi_residual(const ABC& m, DiffScheme sch = DiffScheme::spectral) {
  return zero_curvature_residual(m.A, m.B, diff(m.A, 0, 1, sch), diff(m.B, 1, 0, sch));
}

struct ABCResiduals {
  RMatField xy, xt, yt;
};

/// All three zero-curvature residuals of the moving patch at the centre slice.
inline ABCResiduals mlxiv_residuals(const SurfaceMotion& mo) {
  detail::require_motion(mo);
  const SurfacePatch& s = mo.centre();
  std::vector<ABC> all;
  for (const auto& p : mo.slices) all.push_back(assemble_ABC(p, christoffels_and_weingarten(p)));
  TimeChristoffels tc = time_christoffels(mo);
  ABC m = assemble_ABC(s, christoffels_and_weingarten(s), &tc);
  auto time_d = [&](auto pick) {
    RMatField out(s.grid(), 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        TimeStack st;
        st.dt = mo.dt;
        for (const auto& a : all) st.slices.push_back(to_complex(pick(a).entry(i, j)));
        out.set_entry(i, j, real(time_derivative(st, 1)));
      }
    return out;
  };
  RMatField At = time_d([](const ABC& a) -> const RMatField& { return a.A; });
  RMatField Bt = time_d([](const ABC& a) -> const RMatField& { return a.B; });
  return {codazzi_residual(m, s.scheme), zero_curvature_residual(m.A, m.C, At, diff(m.C, 1, 0, s.scheme)),
          zero_curvature_residual(m.B, m.C, Bt, diff(m.C, 0, 1, s.scheme))};
}

// Orthogonal trihedral ---------------------------------------------------------

/// e1 = r_x/√E, e2 = n, e3 = e1 × e2 and the curvature identification
/// k = L/√E, σ = √Λ Γ²11/E, τ = −√Λ p12/√E, m1 = −√Λ p22/√E, m2 = √Λ Γ²12/E,
/// m3 = M/√E (and ω1 = −√Λ Γ²03/√E, ω2 = √Λ Γ²01/E, ω3 = Γ³01/√E with motion).
/// `printed_lambda` uses Λ in place of √Λ.
struct Trihedral {
  FrameField frame;
  CurvatureSet set;
};

inline Trihedral trihedral_and_identification(const SurfacePatch& s, const GaussWeingarten& w,
                                              const TimeChristoffels* tc = nullptr, int beta = 1,
                                              bool printed_lambda = false) {
  require(beta == 1, ErrorKind::unsupported_signature, "trihedral needs beta = +1");
  RField sE = map(s.E, [](double x) { return std::sqrt(x); });
  RField sL = printed_lambda ? s.Lambda : map(s.Lambda, [](double x) { return std::sqrt(x); });
  Vec3Field e1 = (1.0 / sE) * s.rx;
  Trihedral t{FrameField{e1, s.n, cross(e1, s.n), 1, {}}, {}};
  t.set.beta = 1;
  t.set.k = s.L / sE;
  t.set.sigma = sL * w.G211 / s.E;
  t.set.tau = -1.0 * sL * w.p12 / sE;
  if (!s.grid().is_line()) {
    t.set.m1 = -1.0 * sL * w.p22 / sE;
    t.set.m2 = sL * w.G212 / s.E;
    t.set.m3 = s.M / sE;
  }
  if (tc) {
    t.set.w1 = -1.0 * sL * tc->G203 / sE;
    t.set.w2 = sL * tc->G201 / s.E;
    t.set.w3 = tc->G301 / sE;
  }
  return t;
}

/// The x and y transport matrices exactly as displayed for the trihedral
/// (Λ, not √Λ), for comparison with the identification.
inline RMatField displayed_trihedral_matrix(const SurfacePatch& s, const GaussWeingarten& w, Direction d,
                                            int beta = 1) {
  const Grid2& g = s.grid();
  RMatField m(g, 3);
  const bool x = d == Direction::x;
  require(d != Direction::t, ErrorKind::invalid_argument, "time block needs motion data");
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double se = std::sqrt(s.E[k]), lam = s.Lambda[k];
    const double a = x ? s.L[k] : s.M[k];
    const double G2 = x ? w.G211[k] : w.G212[k];
    const double pp = x ? w.p12[k] : w.p22[k];
    m[k] = RMat(3, {0.0, a / se, -lam * G2 / (se * se), -beta * a / se, 0.0, -lam * pp / se,
                    beta * lam * G2 / (se * se), lam * pp / se, 0.0});
  }
  return m;
}

// SU(2) gauge matrices ------------------------------------------------------------

struct GaugeTriple {
  CMatField U, V, W;
};

/// (1/2i)(a σ1 + b σ2 + c σ3) for the slots (k, σ, τ), (m3, m2, m1), (ω3, ω2, ω1).
inline CMatField su2_from_slots(const RField& a, const RField& b, const RField& c) {
  CMatField m(a.grid, 2);
  const cd h = 1.0 / (2.0 * I);
  for (std::size_t k = 0; k < a.size(); ++k)
    m[k] = h * (a[k] * pauli(1) + b[k] * pauli(2) + c[k] * pauli(3));
  return m;
}

/// U, V (W with motion data) from the trihedral curvatures. `printed_u_sign`
/// flips the σ2 coefficient of U as displayed.
inline GaugeTriple uvw_from_patch(const CurvatureSet& set, bool printed_u_sign = false) {
  GaugeTriple g;
  g.U = su2_from_slots(set.k, printed_u_sign ? -1.0 * set.sigma : set.sigma, set.tau);
  if (set.has(Direction::y)) g.V = su2_from_slots(set.m3, set.m2, set.m1);
  if (set.has(Direction::t)) g.W = su2_from_slots(set.w3, set.w2, set.w1);
  return g;
}

inline CMatField gauge_residual_xy(const GaugeTriple& g, DiffScheme sch = DiffScheme::spectral) {
  return zero_curvature_residual(g.U, g.V, diff(g.U, 0, 1, sch), diff(g.V, 1, 0, sch));
}

/// g_x = U g along each row from g(x0) = g0, RK4 with spectral interpolation
/// of U at the half steps. Returns ê1 = g⁻¹σ3g, ê2 = g⁻¹σ2g, ê3 = g⁻¹σ1g as
/// 3-vectors (components ½ tr(ê σ_a)).
inline FrameField frame_from_gauge(const CMatField& U, const CMat& g0 = CMat::identity(2), int substeps = 4) {
  const Grid2& g = U.grid;
  require(g.periodic_x, ErrorKind::invalid_argument, "gauge transport needs a periodic x-axis");
  const double h = g.dx() / substeps;
  auto shifted = [&](double delta) {
    CMatField out(g, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.set_entry(i, j, apply_symbol_axis(U.entry(i, j), 0, [&](std::size_t m) {
                        return is_nyquist(m, g.nx) ? cd(std::cos(wavenumber(m, g.nx, g.lx) * delta))
                                                   : std::exp(I * wavenumber(m, g.nx, g.lx) * delta);
                      }));
    return out;
  };
  std::vector<CMatField> stages;
  for (int m = 0; m < 2 * substeps; ++m) stages.push_back(m == 0 ? U : shifted(0.5 * h * m));
  auto Uat = [&](std::size_t i, std::size_t j, int m) -> const CMat& {
    std::size_t ii = (i + std::size_t(m / (2 * substeps))) % g.nx;
    return stages[m % (2 * substeps)][g.index(ii, j)];
  };
  FrameField f{vec3(g), vec3(g), vec3(g), 1, {}};
  const int which[3] = {3, 2, 1};
  for (std::size_t j = 0; j < g.ny; ++j) {
    CMat G = g0;
    for (std::size_t i = 0; i < g.nx; ++i) {
      // inverse of an SU(2)-like 2×2 matrix
      const cd det = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0);
      CMat Gi(2, {G(1, 1) / det, -G(0, 1) / det, -G(1, 0) / det, G(0, 0) / det});
      for (int e = 0; e < 3; ++e) {
        CMat eh = Gi * pauli(which[e]) * G;
        for (int a = 0; a < 3; ++a) {
          CMat t = eh * pauli(a + 1);
          f.e(e)[a](i, j) = 0.5 * (t(0, 0) + t(1, 1)).real();
        }
      }
      for (int s = 0; s < substeps; ++s) {
        const CMat& c0 = Uat(i, j, 2 * s);
        const CMat& c1 = Uat(i, j, 2 * s + 1);
        const CMat& c2 = Uat(i, j, 2 * s + 2);
        CMat k1 = c0 * G;
        CMat k2 = c1 * (G + k1 * cd(0.5 * h));
        CMat k3 = c1 * (G + k2 * cd(0.5 * h));
        CMat k4 = c2 * (G + k3 * cd(h));
        G = G + (k1 + k2 * cd(2.0) + k3 * cd(2.0) + k4) * cd(h / 6.0);
      }
    }
  }
  return f;
}

// Gauge construction linking the curve flow to the Zakharov system -------------------

/// iq_t + M1 q + vq, ip_t − M1 p − vp and M2 v + 2 M1(pq), with every ∂x
/// multiplied by x_scale.
struct ZakharovResidual {
  CField q, p, v;
  double max_abs() const { return std::max({mfsol::max_abs(q), mfsol::max_abs(p), mfsol::max_abs(v)}); }
};

inline ZakharovResidual zakharov_residual(const CField& q, const CField& p, const CField& qt, const CField& pt,
                                          const CField& v, const MIXParams& prm, double x_scale = 1.0) {
  MixOperators ops{prm, x_scale};
  return {I * qt + ops.M1(q) + v * q, I * pt - ops.M1(p) - v * p, ops.M2(v) + 2.0 * ops.M1(p * q)};
}

struct MLIXGauge {
  CMatField B0, C0, C1;
  CMat B1, C2;
  CField v;                 // −i(c11 − c22)
  CMatField Z0, Z1, Z2;     // coefficients of g, g_x, g_xx in the compatibility condition
  std::size_t regularized = 0;
  ZakharovResidual zakharov;  // evaluated with ∂x → ½∂x
};

/// α g_y = B1 g_x + B0 g and g_t = i C2 g_xx + C1 g_x + C0 g with B0 = [[0,q],[p,0]],
/// C1 = i B0, B1 = (2a+1)/2 + σ3/2, C2 = (2b+1)/2 + σ3/2,
/// c12 = i[(2b−a+1)q_x + αq_y], c21 = i[(a−2b)p_x − αp_y] and c11, c22 from
/// (a+1)c11_x − αc11_y = i[(2b−a+1)(pq)_x + α(pq)_y],
/// a c22_x − αc22_y = i[(a−2b)(pq)_x − α(pq)_y] (zero modes 0).
inline MLIXGauge mlix_gauge_system(const CField& q, const CField& p, const CField& qt, const CField& pt,
                                   const MIXParams& prm, double lambda_reg = 1e-8) {
  check_same(q.grid, p.grid);
  const Grid2& g = q.grid;
  const double a = prm.a, b = prm.b;
  const cd al = prm.alpha, mu = I;
  require(al != cd{}, ErrorKind::invalid_argument, "alpha must be nonzero");
  MLIXGauge r;
  r.B1 = CMat(2, {cd((2 * a + 1) / 2 + 0.5), 0.0, 0.0, cd((2 * a + 1) / 2 - 0.5)});
  r.C2 = CMat(2, {cd((2 * b + 1) / 2 + 0.5), 0.0, 0.0, cd((2 * b + 1) / 2 - 0.5)});
  r.B0 = CMatField(g, 2);
  r.B0.set_entry(0, 1, q);
  r.B0.set_entry(1, 0, p);
  r.C1 = CMatField(g, 2);
  for (std::size_t k = 0; k < g.size(); ++k) r.C1[k] = I * r.B0[k];
  CField pq = p * q;
  CField pqx = dx(pq), pqy = dy(pq);
  std::size_t n1 = 0, n2 = 0;
  auto transport = [&](double cx, const CField& rhs, std::size_t* n) {
    return detail::regularized_solve(
        rhs, [&](double kx, double ky) { return cx * I * kx - al * I * ky; }, lambda_reg, n);
  };
  CField c11 = transport(a + 1, I * ((2 * b - a + 1) * pqx + al * pqy), &n1);
  CField c22 = transport(a, I * ((a - 2 * b) * pqx - al * pqy), &n2);
  r.regularized = n1 + n2;
  r.C0 = CMatField(g, 2);
  r.C0.set_entry(0, 0, c11);
  r.C0.set_entry(1, 1, c22);
  r.C0.set_entry(0, 1, I * ((2 * b - a + 1) * dx(q) + al * dy(q)));
  r.C0.set_entry(1, 0, I * ((a - 2 * b) * dx(p) - al * dy(p)));
  r.v = -I * (c11 - c22);

  CMatField B0t(g, 2);
  B0t.set_entry(0, 1, qt);
  B0t.set_entry(1, 0, pt);
  CMatField B0x = diff(r.B0, 1, 0), B0xx = diff(r.B0, 2, 0), C0x = diff(r.C0, 1, 0), C0y = diff(r.C0, 0, 1);
  CMatField C1x = diff(r.C1, 1, 0), C1y = diff(r.C1, 0, 1);
  r.Z0 = CMatField(g, 2);
  r.Z1 = CMatField(g, 2);
  r.Z2 = CMatField(g, 2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    r.Z0[k] = -al * C0y[k] + r.B1 * C0x[k] + B0t[k] - mu * (r.C2 * B0xx[k]) - r.C1[k] * B0x[k] +
              commutator(r.B0[k], r.C0[k]);
    r.Z1[k] = -al * C1y[k] + r.B1 * C1x[k] + commutator(r.B1, r.C0[k]) - cd(2.0) * mu * (r.C2 * B0x[k]) +
              commutator(r.B0[k], r.C1[k]);
    r.Z2[k] = commutator(r.B1, r.C1[k]) + mu * commutator(r.B0[k], r.C2);
  }
  r.zakharov = zakharov_residual(q, p, qt, pt, r.v, prm, 0.5);
  return r;
}

}  // namespace mfsol
