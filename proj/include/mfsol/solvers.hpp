#pragma once

#include "equivalence.hpp"

namespace mfsol {

struct EvolutionConfig {
  double dt = 1e-3;
  double t_end = 0.0;
  bool renormalize_spin = false;
  double lambda_reg = 1e-8;
  DiffScheme scheme = DiffScheme::spectral;

  void validate() const {
    require(dt > 0 && std::isfinite(dt), ErrorKind::config, "dt must be positive");
    require(t_end >= 0, ErrorKind::config, "t_end must be nonnegative");
    require(lambda_reg >= 0, ErrorKind::config, "lambda_reg must be nonnegative");
  }
  std::size_t steps() const { return std::size_t(std::llround(t_end / dt)); }
};

struct SpinState {
  Vec3Field S;
  RField u;
  double t = 0.0;
  std::size_t regularized = 0;  // constraint modes regularized at the last solve
  double leakage = 0.0;         // max imaginary part discarded at the last step
};

struct WaveState {
  CField q, p, v;
  double t = 0.0;
  bool conjugate_pair = false;  // p = conj(q) declared
  std::size_t regularized = 0;
  double conjugate_defect = 0.0;  // max|p − conj q| before re-imposing the pair
};

inline constexpr double blow_up_threshold = 1e8;

template <class T>
void check_blow_up(const Field<T>& f, double t, const char* name) {
  for (const auto& z : f.v)
    if (!std::isfinite(std::abs(z)) || std::abs(z) > blow_up_threshold)
      throw BlowUp(t, std::string("blow-up in ") + name);
}

inline void check_blow_up(const SpinState& s) {
  for (int c = 0; c < 3; ++c) check_blow_up(s.S[c], s.t, "S");
  if (s.u.size()) check_blow_up(s.u, s.t, "u");
}

inline void check_blow_up(const WaveState& s) {
  check_blow_up(s.q, s.t, "q");
  check_blow_up(s.p, s.t, "p");
  if (s.v.size()) check_blow_up(s.v, s.t, "v");
}

namespace detail {

template <class State, class Rhs>
State rk4(const State& y, double h, Rhs&& f) {
  State k1 = f(y);
  State k2 = f(y + (0.5 * h) * k1);
  State k3 = f(y + (0.5 * h) * k2);
  State k4 = f(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct Pair {
  CField q, p;
};
inline Pair operator+(const Pair& a, const Pair& b) { return {a.q + b.q, a.p + b.p}; }
inline Pair operator*(double s, const Pair& a) { return {s * a.q, s * a.p}; }

inline double real_alpha2(cd alpha) {
  cd a2 = alpha * alpha;
  require(std::abs(a2.imag()) <= 1e-14 * std::max(1.0, std::abs(a2)), ErrorKind::invalid_argument,
          "spin flows need a real alpha^2");
  return a2.real();
}

// Solves symbol(kx, ky) û = f̂, zero mode set to 0, Tikhonov-regularizing
// modes with |symbol| < λ.
inline CField regularized_solve(const CField& rhs, const std::function<cd(double, double)>& symbol,
                                double lambda, std::size_t* count) {
  std::size_t n = 0;
  CField out = spectral_solve(rhs, [&](double kx, double ky, cd f) -> cd {
    if (kx == 0.0 && ky == 0.0) return 0.0;
    cd s = symbol(kx, ky);
    if (std::abs(s) < lambda) {
      ++n;
      return std::conj(s) * f / (std::norm(s) + lambda * lambda);
    }
    return f / s;
  });
  if (count) *count = n;
  return out;
}

inline CField to_c(const RField& f) { return to_complex(f); }

}  // namespace detail

// LLE and NLSE ---------------------------------------------------------------

/// S × S_xx
inline Vec3Field lle_rhs(const Vec3Field& S, DiffScheme sch = DiffScheme::spectral) {
  return cross(S, diff(S, 2, 0, sch));
}

inline SpinState lle_step(const SpinState& s, const EvolutionConfig& cfg) {
  SpinState r = s;
  r.S = detail::rk4(s.S, cfg.dt, [&](const Vec3Field& S) { return lle_rhs(S, cfg.scheme); });
  if (cfg.renormalize_spin) r.S = normalized(r.S);
  r.t = s.t + cfg.dt;
  check_blow_up(r);
  return r;
}

/// Strang split step of iq_t + q_xx + 2β|q|²q = 0 (linear half, nonlinear
/// phase, linear half). dt may be negative.
inline CField nlse_step(const CField& q, int beta, double dt) {
  auto lin = [&](const CField& f) {
    return apply_symbol2(f, [&](double kx, double ky) { return std::exp(-I * (kx * kx + ky * ky) * (0.5 * dt)); });
  };
  CField a = lin(q);
  for (auto& z : a.v) z *= std::exp(I * (2.0 * beta * std::norm(z) * dt));
  return lin(a);
}

inline CField nlse_step(const CField& q, int beta, const EvolutionConfig& cfg) { return nlse_step(q, beta, cfg.dt); }

/// RK4 step of the same equation with spectral derivatives.
inline CField nlse_rk4_step(const CField& q, int beta, double dt) {
  return detail::rk4(q, dt, [&](const CField& f) {
    return I * (diff(f, 2, 0) + 2.0 * double(beta) * map(f, [](cd z) { return std::norm(z) * z; }));
  });
}

// Ishimori -------------------------------------------------------------------

struct ConstraintSolution {
  RField u;
  std::size_t regularized = 0;
};

/// u_xx − α²u_yy = −2α² S·(S_x × S_y), right-hand side mean subtracted,
/// symbol −kx² + α²ky², zero mode 0, |symbol| < λ regularized.
inline ConstraintSolution ishimori_constraint_solve(const Vec3Field& S, cd alpha, double lambda_reg = 1e-8,
                                                    DiffScheme sch = DiffScheme::spectral) {
  const double a2 = detail::real_alpha2(alpha);
  const Grid2& g = S[0].grid;
  require(!g.is_line(), ErrorKind::invalid_argument, "constraint needs a 2D grid");
  RField T = dot(S, cross(diff(S, 1, 0, sch), diff(S, 0, 1, sch)));
  RField rhs = -2.0 * a2 * (T - mean(T));
  ConstraintSolution r;
  CField u = detail::regularized_solve(
      detail::to_c(rhs), [&](double kx, double ky) { return cd(-kx * kx + a2 * ky * ky); }, lambda_reg,
      &r.regularized);
  r.u = real(u);
  return r;
}

/// S × (S_xx + α² S_yy) + u_x S_y + u_y S_x
inline Vec3Field ishimori_rhs(const Vec3Field& S, const RField& u, cd alpha,
                              DiffScheme sch = DiffScheme::spectral) {
  const double a2 = detail::real_alpha2(alpha);
  Vec3Field Sx = diff(S, 1, 0, sch), Sy = diff(S, 0, 1, sch);
  return cross(S, diff(S, 2, 0, sch) + a2 * diff(S, 0, 2, sch)) + diff(u, 1, 0, sch) * Sy +
         diff(u, 0, 1, sch) * Sx;
}

inline SpinState ishimori_step(const SpinState& s, cd alpha, const EvolutionConfig& cfg) {
  SpinState r = s;
  r.S = detail::rk4(s.S, cfg.dt, [&](const Vec3Field& S) {
    auto c = ishimori_constraint_solve(S, alpha, cfg.lambda_reg, cfg.scheme);
    return ishimori_rhs(S, c.u, alpha, cfg.scheme);
  });
  if (cfg.renormalize_spin) r.S = normalized(r.S);
  auto c = ishimori_constraint_solve(r.S, alpha, cfg.lambda_reg, cfg.scheme);
  r.u = c.u;
  r.regularized = c.regularized;
  r.t = s.t + cfg.dt;
  check_blow_up(r);
  return r;
}

// Davey–Stewartson and Zakharov ----------------------------------------------------

/// v from v_xx − α² v_yy = 2[(pq)_xx + α²(pq)_yy]; `printed_sign` flips the
/// right-hand side.
inline CField ds_potential(const CField& q, const CField& p, cd alpha, double lambda_reg = 1e-8,
                           std::size_t* regularized = nullptr, bool printed_sign = false) {
  const cd a2 = alpha * alpha;
  const double sgn = printed_sign ? -1.0 : 1.0;
  CField pq = p * q;
  CField rhs = apply_symbol2(pq, [&](double kx, double ky) { return sgn * 2.0 * (-kx * kx - a2 * ky * ky); });
  return detail::regularized_solve(rhs, [&](double kx, double ky) { return -kx * kx + a2 * ky * ky; }, lambda_reg,
                                   regularized);
}

/// v from M2 v = −2 M1(pq).
inline CField zakharov_potential(const CField& q, const CField& p, const MIXParams& prm, double lambda_reg = 1e-8,
                                 std::size_t* regularized = nullptr) {
  auto ops = mix_operators(prm);
  CField rhs = -2.0 * ops.M1(p * q);
  return detail::regularized_solve(rhs, [&](double kx, double ky) { return ops.m2_symbol(kx, ky); }, lambda_reg,
                                   regularized);
}

namespace detail {

inline WaveState finish_wave(const WaveState& s, Pair y, double dt, CField v, std::size_t reg) {
  WaveState r = s;
  r.q = std::move(y.q);
  r.p = std::move(y.p);
  r.v = std::move(v);
  r.regularized = reg;
  r.t = s.t + dt;
  if (s.conjugate_pair) {
    r.conjugate_defect = max_abs(r.p - conj(r.q));
    r.p = conj(r.q);
  }
  check_blow_up(r);
  return r;
}

}  // namespace detail

/// iq_t + q_xx + α²q_yy + vq = 0, −ip_t + p_xx + α²p_yy + vp = 0 by RK4.
inline WaveState ds_step(const WaveState& s, cd alpha, const EvolutionConfig& cfg, bool printed_sign = false) {
  const cd a2 = alpha * alpha;
  auto lap = [&](const CField& f) { return diff(f, 2, 0) + a2 * diff(f, 0, 2); };
  auto rhs = [&](const detail::Pair& y) -> detail::Pair {
    CField v = ds_potential(y.q, y.p, alpha, cfg.lambda_reg, nullptr, printed_sign);
    return {I * (lap(y.q) + v * y.q), -I * (lap(y.p) + v * y.p)};
  };
  detail::Pair y = detail::rk4(detail::Pair{s.q, s.p}, cfg.dt, rhs);
  std::size_t reg = 0;
  CField v = ds_potential(y.q, y.p, alpha, cfg.lambda_reg, &reg, printed_sign);
  return detail::finish_wave(s, std::move(y), cfg.dt, std::move(v), reg);
}

/// iq_t + M1 q + vq = 0, ip_t − M1 p − vp = 0, M2 v = −2 M1(pq) by RK4.
inline WaveState zakharov_step(const WaveState& s, const MIXParams& prm, const EvolutionConfig& cfg) {
  auto ops = mix_operators(prm);
  auto rhs = [&](const detail::Pair& y) -> detail::Pair {
    CField v = zakharov_potential(y.q, y.p, prm, cfg.lambda_reg);
    return {I * (ops.M1(y.q) + v * y.q), -I * (ops.M1(y.p) + v * y.p)};
  };
  detail::Pair y = detail::rk4(detail::Pair{s.q, s.p}, cfg.dt, rhs);
  std::size_t reg = 0;
  CField v = zakharov_potential(y.q, y.p, prm, cfg.lambda_reg, &reg);
  return detail::finish_wave(s, std::move(y), cfg.dt, std::move(v), reg);
}

// M-IX and M-I spin flows ------------------------------------------------------

struct MixRhs {
  Vec3Field dS;
  RField u;
  double leakage = 0.0;
  std::size_t regularized = 0;
};

/// S × M1 S + (A2/i) S_x + (A1/i) S_y with M2 u = 2α² S·(S_x × S_y).
/// Imaginary parts (non-real α coefficients) are dropped and reported.
inline MixRhs mix_rhs(const Vec3Field& S, const MIXParams& prm, double lambda_reg = 1e-8) {
  auto ops = mix_operators(prm);
  const Grid2& g = S[0].grid;
  const cd a2 = prm.alpha * prm.alpha;
  Vec3Field Sx = dx(S), Sy = dy(S);
  RField T = dot(S, cross(Sx, Sy));
  MixRhs r;
  CField uc = detail::regularized_solve(detail::to_c(2.0 * (T - mean(T))) * a2,
                                        [&](double kx, double ky) { return ops.m2_symbol(kx, ky); }, lambda_reg,
                                        &r.regularized);
  r.leakage = max_abs(imag(uc));
  r.u = real(uc);
  CField ucr = detail::to_c(r.u);
  CField A1 = ops.A1(ucr) * (-I), A2 = ops.A2(ucr) * (-I);
  std::array<CField, 3> M1S{ops.M1(detail::to_c(S[0])), ops.M1(detail::to_c(S[1])), ops.M1(detail::to_c(S[2]))};
  for (int c = 0; c < 3; ++c) {
    r.leakage = std::max(r.leakage, max_abs(imag(M1S[c])));
  }
  r.leakage = std::max({r.leakage, max_abs(imag(A1)), max_abs(imag(A2))});
  Vec3Field M1r{real(M1S[0]), real(M1S[1]), real(M1S[2])};
  r.dS = cross(S, M1r) + real(A2) * Sx + real(A1) * Sy;
  (void)g;
  return r;
}

inline SpinState mix_step(const SpinState& s, const MIXParams& prm, const EvolutionConfig& cfg) {
  SpinState r = s;
  double leak = 0.0;
  r.S = detail::rk4(s.S, cfg.dt, [&](const Vec3Field& S) {
    auto m = mix_rhs(S, prm, cfg.lambda_reg);
    leak = std::max(leak, m.leakage);
    return m.dS;
  });
  if (cfg.renormalize_spin) r.S = normalized(r.S);
  auto m = mix_rhs(r.S, prm, cfg.lambda_reg);
  r.u = m.u;
  r.regularized = m.regularized;
  r.leakage = leak;
  r.t = s.t + cfg.dt;
  check_blow_up(r);
  return r;
}

/// u with u_x = −S·(S_x × S_y), mean-zero along each row.
inline RField mI_potential(const Vec3Field& S) {
  return antiderivative_x(-1.0 * dot(S, cross(dx(S), dy(S))));
}

/// (S × S_y)_x + u_x S + u S_x with u_x = −S·(S_x × S_y) taken exactly, so
/// S·rhs = 0 even when a row mean of the triple product is dropped from u.
inline Vec3Field mI_rhs(const Vec3Field& S) {
  Vec3Field Sx = dx(S);
  RField T = dot(S, cross(Sx, dy(S)));
  RField u = antiderivative_x(-1.0 * T);
  return dx(cross(S, dy(S))) - T * S + u * Sx;
}

inline SpinState mI_step(const SpinState& s, const EvolutionConfig& cfg) {
  SpinState r = s;
  r.S = detail::rk4(s.S, cfg.dt, [](const Vec3Field& S) { return mI_rhs(S); });
  if (cfg.renormalize_spin) r.S = normalized(r.S);
  r.u = mI_potential(r.S);
  r.t = s.t + cfg.dt;
  check_blow_up(r);
  return r;
}

/// Applies `step` until t_end, calling `observe(state)` after every step.
template <class State, class Step, class Observe>
State evolve(State s, const EvolutionConfig& cfg, Step&& step, Observe&& observe) {
  cfg.validate();
  const std::size_t n = cfg.steps();
  for (std::size_t i = 0; i < n; ++i) {
    s = step(s);
    observe(s);
  }
  return s;
}

template <class State, class Step>
State evolve(State s, const EvolutionConfig& cfg, Step&& step) {
  return evolve(std::move(s), cfg, std::forward<Step>(step), [](const State&) {});
}

}  // namespace mfsol
