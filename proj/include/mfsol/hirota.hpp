#pragma once

#include <memory>

#include "equivalence.hpp"
#include "solvers.hpp"
#include "frames.hpp"

namespace mfsol {

/// c·exp(kx x + ky y + kt t)
struct ExpTerm {
  cd c, kx, ky, kt;
};

/// Finite sum of exponentials of linear phases. Derivatives are exact.
struct ExpSum {
  std::vector<ExpTerm> terms;

  cd operator()(double x, double y, double t) const {
    cd s{};
    for (const auto& e : terms) s += e.c * std::exp(e.kx * x + e.ky * y + e.kt * t);
    return s;
  }
  CField sample(const Grid2& g, double t, int jx = 0, int jy = 0, int jt = 0) const {
    CField out(g);
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        cd s{};
        for (const auto& e : terms)
          s += e.c * std::pow(e.kx, jx) * std::pow(e.ky, jy) * std::pow(e.kt, jt) *
               std::exp(e.kx * g.x(i) + e.ky * g.y(j) + e.kt * t);
        out(i, j) = s;
      }
    return out;
  }
};

/// Pair of tau functions at one evaluation time, given through their partial
/// derivatives ∂x^jx ∂y^jy ∂t^jt.
struct TauPair {
  using Deriv = std::function<CField(int, int, int)>;
  Grid2 grid;
  Deriv f, g;
  bool has_time = false;

  static TauPair from_samples(const CField& f, const CField& g, DiffScheme sch = DiffScheme::spectral) {
    return from_stacks(TimeStack{{f}, 0.0}, TimeStack{{g}, 0.0}, sch);
  }

  /// Odd stacks (≥ 5 slices) give time derivatives at the centre slice.
  static TauPair from_stacks(TimeStack f, TimeStack g, DiffScheme sch = DiffScheme::spectral) {
    require(!f.slices.empty() && f.slices.size() == g.slices.size(), ErrorKind::dimension_mismatch,
            "tau stacks must be nonempty and of equal length");
    check_same(f.centre().grid, g.centre().grid);
    TauPair tp;
    tp.grid = f.centre().grid;
    tp.has_time = f.slices.size() >= 5;
    auto make = [sch](TimeStack s) -> Deriv {
      auto p = std::make_shared<TimeStack>(std::move(s));
      return [p, sch](int jx, int jy, int jt) { return diff(time_derivative(*p, jt), jx, jy, sch); };
    };
    tp.f = make(std::move(f));
    tp.g = make(std::move(g));
    return tp;
  }

  static TauPair from_exp(const ExpSum& f, const ExpSum& g, const Grid2& grid, double t) {
    TauPair tp;
    tp.grid = grid;
    tp.has_time = true;
    tp.f = [f, grid, t](int jx, int jy, int jt) { return f.sample(grid, t, jx, jy, jt); };
    tp.g = [g, grid, t](int jx, int jy, int jt) { return g.sample(grid, t, jx, jy, jt); };
    return tp;
  }
};

namespace detail {

inline TauPair::Deriv conj_deriv(const TauPair::Deriv& d) {
  return [d](int jx, int jy, int jt) { return conj(d(jx, jy, jt)); };
}

// D(a∘b) where a, b are derivative providers.
inline CField bil(int mx, int my, int mt, const TauPair::Deriv& a, const TauPair::Deriv& b) {
  return hirota_expand(DOrders{mx, my, mt}, a, b);
}

struct TauBasics {
  CField f, g;
  RField lambda;  // f̄f + ḡg
};

inline TauBasics tau_basics(const TauPair& tp, double min_lambda = 1e-14) {
  TauBasics b;
  b.f = tp.f(0, 0, 0);
  b.g = tp.g(0, 0, 0);
  b.lambda = RField(tp.grid);
  for (std::size_t k = 0; k < b.f.size(); ++k) b.lambda[k] = std::norm(b.f[k]) + std::norm(b.g[k]);
  double lo = *std::min_element(b.lambda.v.begin(), b.lambda.v.end());
  require(lo > min_lambda, ErrorKind::singular, "f̄f + ḡg vanishes");
  return b;
}

}  // namespace detail

inline Vec3Field spin_from_tau(const TauPair& tp) {
  auto b = detail::tau_basics(tp);
  Vec3Field S = vec3(tp.grid);
  for (std::size_t k = 0; k < b.f.size(); ++k) {
    cd sp = 2.0 * std::conj(b.f[k]) * b.g[k] / b.lambda[k];
    S[0][k] = sp.real();
    S[1][k] = sp.imag();
    S[2][k] = (std::norm(b.f[k]) - std::norm(b.g[k])) / b.lambda[k];
  }
  return S;
}

/// ∂t of spin_from_tau; needs time derivatives of the pair.
inline Vec3Field spin_time_derivative(const TauPair& tp) {
  require(tp.has_time, ErrorKind::invalid_argument, "tau pair carries no time derivatives");
  auto b = detail::tau_basics(tp);
  CField ft = tp.f(0, 0, 1), gt = tp.g(0, 0, 1);
  Vec3Field St = vec3(tp.grid);
  for (std::size_t k = 0; k < b.f.size(); ++k) {
    const cd f = b.f[k], g = b.g[k];
    const double L = b.lambda[k];
    const double Lt = 2.0 * (std::conj(f) * ft[k] + std::conj(g) * gt[k]).real();
    cd sp = 2.0 * std::conj(f) * g / L;
    cd spt = 2.0 * (std::conj(ft[k]) * g + std::conj(f) * gt[k]) / L - sp * Lt / L;
    double s3t = 2.0 * (std::conj(f) * ft[k] - std::conj(g) * gt[k]).real() / L -
                 (std::norm(f) - std::norm(g)) * Lt / (L * L);
    St[0][k] = spt.real();
    St[1][k] = spt.imag();
    St[2][k] = s3t;
  }
  return St;
}

/// Right-handed frame with e1 = S. With a = f/√Λ, b = g/√Λ and
/// m = (a² − b², i(a² + b²), −2ab): e3 = Re m, e2 = −Im m.
inline FrameField frame_from_tau(const TauPair& tp) {
  auto bs = detail::tau_basics(tp);
  FrameField fr;
  fr.e1 = spin_from_tau(tp);
  fr.e2 = vec3(tp.grid);
  fr.e3 = vec3(tp.grid);
  for (std::size_t k = 0; k < bs.f.size(); ++k) {
    const double s = std::sqrt(bs.lambda[k]);
    const cd a = bs.f[k] / s, b = bs.g[k] / s;
    const cd m[3] = {a * a - b * b, I * (a * a + b * b), -2.0 * a * b};
    for (int c = 0; c < 3; ++c) {
      fr.e3[c][k] = m[c].real();
      fr.e2[c][k] = -m[c].imag();
    }
  }
  return fr;
}

struct TauDensities {
  RField tau, m1, k, sigma, m2, m3;
  double imag_leak = 0;  // largest discarded imaginary part
};

/// Connection coefficients of frame_from_tau in bilinear form.
inline TauDensities densities_from_tau(const TauPair& tp, bool with_y = true) {
  auto b = detail::tau_basics(tp);
  const auto F = tp.f, G = tp.g;
  const auto Fb = detail::conj_deriv(F), Gb = detail::conj_deriv(G);
  const CField L = to_complex(b.lambda);
  TauDensities d;
  auto take = [&](const CField& v) {
    CField w = v / L;
    d.imag_leak = std::max(d.imag_leak, max_abs(imag(w)));
    return real(w);
  };
  using detail::bil;
  auto dir = [&](int mx, int my, RField& twist, RField& bend_a, RField& bend_b) {
    CField gf = bil(mx, my, 0, G, F), gfb = bil(mx, my, 0, Gb, Fb);
    twist = take(-I * (bil(mx, my, 0, Fb, F) + bil(mx, my, 0, Gb, G)));
    bend_a = take(I * (gf - gfb));
    bend_b = take(-1.0 * (gf + gfb));
  };
  dir(1, 0, d.tau, d.k, d.sigma);
  if (with_y && !tp.grid.is_line()) dir(0, 1, d.m1, d.m3, d.m2);
  return d;
}

/// Numerators of the frame_from_tau connection along one direction, each
/// coefficient being numerator / Λ: twist (τ, m1, ω1), bend_a (k, m3, ω3) and
/// bend_b (σ, m2, ω2).
struct TauNumerators {
  RField twist, bend_a, bend_b;
};

inline TauNumerators tau_numerators(const TauPair& tp, int mx, int my, int mt) {
  const auto F = tp.f, G = tp.g;
  const auto Fb = detail::conj_deriv(F), Gb = detail::conj_deriv(G);
  using detail::bil;
  CField gf = bil(mx, my, mt, G, F), gfb = bil(mx, my, mt, Gb, Fb);
  return {real(-I * (bil(mx, my, mt, Fb, F) + bil(mx, my, mt, Gb, G))), real(I * (gf - gfb)),
          real(-1.0 * (gf + gfb))};
}

/// Conservation residuals of the frame_from_tau frame for tau stacks (odd,
/// ≥ 5 slices, spacing dt), evaluated where Λ ≥ min_lambda and zero elsewhere.
/// Every coefficient is N/Λ with smooth N, so products are P/Λ² and their
/// space derivatives are taken as (P_x Λ − 2PΛ_x)/Λ³ from spectral derivatives
/// of smooth fields; points where the frame is singular never enter a derivative.
inline ScalarTriple tau_conservation_residual(const TimeStack& f, const TimeStack& g, double min_lambda,
                                              DiffScheme sch = DiffScheme::spectral) {
  const TauPair tp = TauPair::from_stacks(f, g, sch);
  const Grid2& grid = tp.grid;
  auto lam = [](const CField& a, const CField& b) {
    RField l(a.grid);
    for (std::size_t k = 0; k < a.size(); ++k) l[k] = std::norm(a[k]) + std::norm(b[k]);
    return l;
  };
  // slice densities (σm1 − τm2, τm3 − km1, km2 − σm3) as values
  std::array<std::vector<RField>, 3> dens;
  for (std::size_t s = 0; s < f.slices.size(); ++s) {
    const TauPair ts = TauPair::from_samples(f.slices[s], g.slices[s], sch);
    const TauNumerators x = tau_numerators(ts, 1, 0, 0), y = tau_numerators(ts, 0, 1, 0);
    const RField L = lam(f.slices[s], g.slices[s]);
    RField L2 = L * L;
    for (std::size_t k = 0; k < L2.size(); ++k) L2[k] = L2[k] > 0 ? 1.0 / L2[k] : 0.0;
    dens[0].push_back((x.bend_b * y.twist - x.twist * y.bend_b) * L2);
    dens[1].push_back((x.twist * y.bend_a - x.bend_a * y.twist) * L2);
    dens[2].push_back((x.bend_a * y.bend_b - x.bend_b * y.bend_a) * L2);
  }
  const std::size_t c = f.slices.size() / 2;
  const double h = 1.0 / (12.0 * f.dt);
  auto dt_of = [&](const std::vector<RField>& v) { return (v[c - 2] - 8.0 * v[c - 1] + 8.0 * v[c + 1] - v[c + 2]) * h; };

  const TauNumerators x = tau_numerators(tp, 1, 0, 0), y = tau_numerators(tp, 0, 1, 0), t = tau_numerators(tp, 0, 0, 1);
  const RField L = lam(f.centre(), g.centre());
  const RField Lx = dx(L, sch), Ly = dy(L, sch);
  // ∂(P/Λ²) with ∂ = dx or dy, as a field of values on the mask
  auto d_over = [&](const RField& P, bool along_x) {
    const RField Pd = along_x ? dx(P, sch) : dy(P, sch);
    const RField& Ld = along_x ? Lx : Ly;
    RField out(grid);
    for (std::size_t k = 0; k < out.size(); ++k)
      if (L[k] >= min_lambda) out[k] = (Pd[k] * L[k] - 2.0 * P[k] * Ld[k]) / (L[k] * L[k] * L[k]);
    return out;
  };
  // (k, σ, τ) = x.(bend_a, bend_b, twist); (m3, m2, m1) and (ω3, ω2, ω1) likewise
  ScalarTriple r{dt_of(dens[0]) - d_over(x.bend_b * t.twist - x.twist * t.bend_b, false) +
                     d_over(y.bend_b * t.twist - y.twist * t.bend_b, true),
                 dt_of(dens[1]) - d_over(x.twist * t.bend_a - x.bend_a * t.twist, false) +
                     d_over(y.twist * t.bend_a - y.bend_a * t.twist, true),
                 dt_of(dens[2]) - d_over(x.bend_a * t.bend_b - x.bend_b * t.bend_a, false) +
                     d_over(y.bend_a * t.bend_b - y.bend_b * t.bend_a, true)};
  for (RField* p : {&r.a, &r.b, &r.c})
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (L[k] < min_lambda) (*p)[k] = 0.0;
  return r;
}

struct TauPotential {
  CField ux, uy;
  CField curl;  // ∂y u_x − ∂x u_y
};

namespace detail {

inline TauPotential finish_potential(CField ux, CField uy, DiffScheme sch) {
  TauPotential p{std::move(ux), std::move(uy), CField()};
  p.curl = diff(p.ux, 0, 1, sch) - diff(p.uy, 1, 0, sch);
  return p;
}

// D_x(f̄∘f + ḡ∘g)/Λ and D_y(...)/Λ
inline std::pair<CField, CField> twist_brackets(const TauPair& tp) {
  auto b = tau_basics(tp);
  const auto Fb = conj_deriv(tp.f), Gb = conj_deriv(tp.g);
  const CField L = to_complex(b.lambda);
  return {(bil(1, 0, 0, Fb, tp.f) + bil(1, 0, 0, Gb, tp.g)) / L,
          (bil(0, 1, 0, Fb, tp.f) + bil(0, 1, 0, Gb, tp.g)) / L};
}

}  // namespace detail

/// Gradient of the Ishimori potential from a tau pair.
inline TauPotential potential_from_tau(const TauPair& tp, cd alpha, DiffScheme sch = DiffScheme::spectral) {
  auto [Dx, Dy] = detail::twist_brackets(tp);
  return detail::finish_potential(-2.0 * I * alpha * alpha * Dy, -2.0 * I * Dx, sch);
}

/// Gradient of the M-IX potential; reduces to the Ishimori form at a = −1/2.
inline TauPotential potential_from_tau(const TauPair& tp, const MIXParams& prm,
                                       DiffScheme sch = DiffScheme::spectral) {
  auto [Dx, Dy] = detail::twist_brackets(tp);
  const cd al = prm.alpha, a = prm.a;
  CField ux = 2.0 * I * al * (2.0 * a + 1.0) * Dx - 2.0 * I * al * al * Dy;
  CField uy = 8.0 * I * a * (a + 1.0) * Dx - 2.0 * I * al * (2.0 * a + 1.0) * Dy;
  return detail::finish_potential(std::move(ux), std::move(uy), sch);
}

struct BilinearResidual {
  CField a;  // acting on f̄∘f − ḡ∘g
  CField b;  // acting on f̄∘g
  double max_abs() const { return std::max(mfsol::max_abs(a), mfsol::max_abs(b)); }
};

/// (iD_t − D_x² − α²D_y²) applied to f̄∘f − ḡ∘g and to f̄∘g, divided by
/// f̄f + ḡg so that growing exponentials do not swamp the scale.
inline BilinearResidual bilinear_residual_ishimori(const TauPair& tp, cd alpha) {
  require(tp.has_time, ErrorKind::invalid_argument,
          "bilinear residual needs time derivatives (≥ 5 slices or an exact source)");
  const auto Fb = detail::conj_deriv(tp.f), Gb = detail::conj_deriv(tp.g);
  const cd a2 = alpha * alpha;
  auto op = [&](const TauPair::Deriv& u, const TauPair::Deriv& v) {
    CField r = I * detail::bil(0, 0, 1, u, v) - detail::bil(2, 0, 0, u, v);
    if (!tp.grid.is_line()) r = r - a2 * detail::bil(0, 2, 0, u, v);
    return r;
  };
  const CField L = to_complex(detail::tau_basics(tp).lambda);
  return {(op(Fb, tp.f) - op(Gb, tp.g)) / L, op(Fb, tp.g) / L};
}

struct MIConstraint {
  CField residual;  // D_x(f̄∘f + ḡ∘g)/Λ
  RField u;         // −i D_y(f̄∘f + ḡ∘g)/Λ
};

inline MIConstraint mI_constraints(const TauPair& tp) {
  auto [Dx, Dy] = detail::twist_brackets(tp);
  return {Dx, real(-I * Dy)};
}

/// Residual of S_t = S×(S_xx + α²S_yy) + u_x S_y + u_y S_x for a given potential gradient.
inline Vec3Field ishimori_gradient_residual(const Vec3Field& S, const Vec3Field& St, const RField& ux,
                                            const RField& uy, cd alpha,
                                            DiffScheme sch = DiffScheme::spectral) {
  const double a2 = detail::real_alpha2(alpha);
  return St - (cross(S, diff(S, 2, 0, sch) + a2 * diff(S, 0, 2, sch)) + ux * diff(S, 0, 1, sch) +
               uy * diff(S, 1, 0, sch));
}

/// One-soliton pair f = 1 + A e^{η+η̄}, g = B e^η with η = px + ry + ωt and
/// ω = i(p² + α²r²). A solves the remaining condition of the bilinear system;
/// that condition fixes one real combination only, so A is chosen real.
struct OneSoliton {
  cd p, r, B, omega, A;
  ExpSum f, g;
};

inline OneSoliton one_soliton(cd p, cd r, cd B, cd alpha) {
  const double a2 = detail::real_alpha2(alpha);
  OneSoliton s{p, r, B, I * (p * p + a2 * r * r), 0.0, {}, {}};
  // P(X, Y, T) = iT − X² − α²Y² for the exponent coefficients (X, Y, T)
  auto P = [a2](cd X, cd Y, cd T) { return I * T - X * X - a2 * Y * Y; };
  const cd xr = p + std::conj(p), yr = r + std::conj(r), tr = s.omega + std::conj(s.omega);
  const cd Pp = P(xr, yr, tr), Pm = P(-xr, -yr, -tr);
  const cd rhs = std::norm(B) * P(std::conj(p) - p, std::conj(r) - r, std::conj(s.omega) - s.omega);
  // A Pm + Ā Pp = rhs with Pm = conj(Pp) is a single real condition; A is taken real.
  const double c = (Pm + Pp).real();
  require(std::abs(c) > 1e-14, ErrorKind::singular, "one-soliton coupling is degenerate");
  s.A = rhs.real() / c;
  s.f.terms = {{1.0, 0.0, 0.0, 0.0}, {s.A, xr, yr, tr}};
  s.g.terms = {{B, p, r, s.omega}};
  return s;
}

}  // namespace mfsol
