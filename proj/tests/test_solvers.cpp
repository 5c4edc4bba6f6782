#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "mfsol/presets.hpp"
#include "mfsol/solvers.hpp"

using namespace mfsol;

namespace {

Vec3Field random_spin(const Grid2& g, unsigned seed, double amp = 0.6) {
  Vec3Field v{presets::band_limited(g, 3, amp, seed, 0.3), presets::band_limited(g, 3, amp, seed + 1, -0.2),
              presets::band_limited(g, 3, amp, seed + 2, 0.8)};
  return normalized(v);
}

// Fourier second-derivative matrix on n points of [0, 2π).
Eigen::MatrixXd fourier_d2(int n) {
  const double h = 2 * pi / n;
  Eigen::MatrixXd D(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (j == k) {
        D(j, k) = -pi * pi / (3 * h * h) - 1.0 / 6.0;
      } else {
        double s = std::sin((j - k) * h / 2);
        D(j, k) = -((j - k) % 2 == 0 ? 1.0 : -1.0) / (2 * s * s);
      }
    }
  return D;
}

double max_diff(const Vec3Field& a, const Vec3Field& b) { return max_abs(a - b); }

}  // namespace

TEST(Lle, TrivialRhs) {
  Grid2 g = Grid2::line(64, 2 * pi);
  EXPECT_EQ(max_abs(lle_rhs(presets::constant_spin(g))), 0.0);
  EXPECT_LT(max_abs(lle_rhs(presets::circle(g))), 1e-12);
  Vec3Field S = random_spin(g, 3);
  EXPECT_LT(max_abs(dot(lle_rhs(S), S)), 1e-12);
}

TEST(Lle, SelfConvergenceOrder) {
  Grid2 g = Grid2::line(64, 2 * pi);
  Vec3Field S0 = presets::modulated_circle(g, 0.3);
  auto run = [&](double dt) {
    SpinState s{S0, {}, 0.0};
    EvolutionConfig c{dt, 0.08};
    return evolve(s, c, [&](const SpinState& x) { return lle_step(x, c); }).S;
  };
  Vec3Field ref = run(2.5e-4);
  double e1 = max_diff(run(2e-3), ref), e2 = max_diff(run(1e-3), ref);
  EXPECT_GT(std::log2(e1 / e2), 3.5);
}

TEST(Lle, BlowUpDetected) {
  Grid2 g = Grid2::line(64, 2 * pi);
  SpinState s{random_spin(g, 9), {}, 0.0};
  EvolutionConfig c{0.05, 20.0};
  try {
    evolve(s, c, [&](const SpinState& x) { return lle_step(x, c); });
    FAIL();
  } catch (const BlowUp& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_EQ(e.kind(), ErrorKind::blow_up);
  }
}

TEST(Nlse, PlaneWave) {
  Grid2 g = Grid2::line(64, 2 * pi);
  const double A = 0.7, p = 3.0, dt = 1e-3;
  for (int beta : {1, -1}) {
    const double w = p * p - 2.0 * beta * A * A;
    CField q = CField::sample(g, [&](double x, double) { return A * std::exp(I * p * x); });
    for (int n = 0; n < 100; ++n) q = nlse_step(q, beta, dt);
    CField ref = CField::sample(g, [&](double x, double) { return A * std::exp(I * (p * x - w * 100 * dt)); });
    EXPECT_LT(max_abs(q - ref), 1e-8);
  }
  CField z(g);
  EXPECT_EQ(max_abs(nlse_step(z, 1, dt)), 0.0);
}

TEST(Nlse, MassAndReversibility) {
  Grid2 g = Grid2::line(128, 2 * pi);
  CField q = to_complex(presets::band_limited(g, 6, 1.0, 4, 0.5)) *
             map(presets::band_limited(g, 4, 2.0, 5), [](double x) { return std::exp(I * x); });
  auto mass = [](const CField& f) { return integrate(map(f, [](cd z) { return std::norm(z); })); };
  CField a = nlse_step(q, 1, 1e-3);
  EXPECT_LT(std::abs(mass(a) - mass(q)) / mass(q), 1e-10);
  EXPECT_LT(max_abs(nlse_step(a, 1, -1e-3) - q), 1e-12);
}

TEST(Nlse, SolitonTranslates) {
  Grid2 g = Grid2::line(512, 40.0, -20.0);
  const double eta = 1.0, xi = 1.0, T = 1.0, dt = 1e-3;
  CField q = CField::sample(g, [&](double x, double) { return eta / std::cosh(eta * (x + 5)) * std::exp(I * xi * x); });
  for (int n = 0; n < int(T / dt + 0.5); ++n) q = nlse_step(q, 1, dt);
  RField ref = RField::sample(g, [&](double x, double) { return eta / std::cosh(eta * (x + 5 - 2 * xi * T)); });
  EXPECT_LT(max_abs(abs(q) - ref), 1e-3);
}

TEST(IshimoriConstraint, TrivialCases) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  EXPECT_EQ(max_abs(ishimori_constraint_solve(presets::constant_spin(g), I).u), 0.0);
  Vec3Field S = random_spin(Grid2::line(32, 2 * pi), 2);
  Vec3Field Sy = vec3(g);
  for (int c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) Sy[c](i, j) = S[c][j];  // depends on y only
  EXPECT_LT(max_abs(ishimori_constraint_solve(Sy, I).u), 1e-14);
  EXPECT_THROW(ishimori_constraint_solve(presets::constant_spin(g), cd(1, 1)), Error);
}

TEST(IshimoriConstraint, DenseOracle) {
  const int n = 32;
  Grid2 g = Grid2::periodic(n, n, 2 * pi, 2 * pi);
  Vec3Field S = random_spin(g, 17);
  for (cd alpha : {I, cd(0.0, 0.5)}) {
    const double a2 = (alpha * alpha).real();
    auto sol = ishimori_constraint_solve(S, alpha);
    EXPECT_EQ(sol.regularized, 0u);
    RField T = dot(S, cross(dx(S), dy(S)));
    Eigen::VectorXd rhs(n * n);
    double m = mean(T);
    for (int k = 0; k < n * n; ++k) rhs[k] = -2.0 * a2 * (T[k] - m);
    Eigen::MatrixXd D = fourier_d2(n);
    // index j*n + i, x fastest; the constant block pins the mean to 0
    Eigen::MatrixXd Lop = Eigen::MatrixXd::Constant(n * n, n * n, 1.0 / (n * n));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          Lop(j * n + i, j * n + k) += D(i, k);
          Lop(j * n + i, k * n + i) -= a2 * D(j, k);
        }
    Eigen::VectorXd u = Lop.partialPivLu().solve(rhs);
    double err = 0;
    for (int k = 0; k < n * n; ++k) err = std::max(err, std::abs(u[k] - sol.u[k]));
    EXPECT_LT(err, 1e-10);
  }
}

TEST(IshimoriConstraint, HyperbolicRegularization) {
  Grid2 g = Grid2::periodic(16, 16, 2 * pi, 2 * pi);
  auto sol = ishimori_constraint_solve(random_spin(g, 5), 1.0);
  // kx = ±ky lie on the characteristic cone
  EXPECT_GT(sol.regularized, 0u);
  EXPECT_TRUE(all_finite(sol.u));
}

TEST(Ishimori, ConstantIsFixedPoint) {
  Grid2 g = Grid2::periodic(16, 16, 2 * pi, 2 * pi);
  SpinState s{presets::constant_spin(g, {0.6, 0.0, 0.8}), RField(g), 0.0};
  auto r = ishimori_step(s, I, {1e-3, 0.0});
  EXPECT_LT(max_diff(r.S, s.S), 1e-15);
}

TEST(Ishimori, YIndependentReducesToLle) {
  Grid2 line = Grid2::line(64, 2 * pi), g = Grid2::periodic(64, 8, 2 * pi, 2 * pi);
  Vec3Field S1 = presets::modulated_circle(line, 0.3);
  Vec3Field S2 = vec3(g);
  for (int c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) S2[c](i, j) = S1[c][i];
  EvolutionConfig cfg{1e-3, 0.0};
  SpinState a{S1, {}, 0.0}, b{S2, RField(g), 0.0};
  for (int n = 0; n < 20; ++n) {
    a = lle_step(a, cfg);
    b = ishimori_step(b, 0.7, cfg);
  }
  EXPECT_LT(max_abs(b.u), 1e-14);
  double err = 0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) err = std::max(err, std::abs(b.S[c](i, j) - a.S[c][i]));
  EXPECT_LT(err, 1e-10);
}

TEST(Ishimori, RhsOrthogonalAndNormPreserved) {
  Grid2 g = Grid2::periodic(64, 64, 2 * pi, 2 * pi);
  Vec3Field S = sample_vec3(g, [](double x, double y) -> std::array<double, 3> {
    double a = x + 0.4 * std::sin(y), b = 0.5 * pi + 0.3 * std::cos(x + y);
    return {std::cos(a) * std::sin(b), std::sin(a) * std::sin(b), std::cos(b)};
  });
  auto c = ishimori_constraint_solve(S, I);
  EXPECT_LT(max_abs(dot(ishimori_rhs(S, c.u, I), S)), 1e-12);
  SpinState s{S, c.u, 0.0};
  auto r = ishimori_step(s, I, {1e-3, 0.0});
  EXPECT_LT(unit_norm_defect(r.S), 1e-8);
}

TEST(Ishimori, ChargeConserved) {
  Grid2 g = Grid2::periodic(128, 128, 32.0, 32.0);
  SpinState s{presets::instanton(g, 2.0, 5.0), RField(g), 0.0};
  EvolutionConfig cfg{1e-3, 0.1};
  double q0 = topological_charge(s.S);
  s = evolve(s, cfg, [&](const SpinState& x) { return ishimori_step(x, I, cfg); });
  EXPECT_NEAR(q0, 1.0, 1e-6);
  EXPECT_LT(std::abs(topological_charge(s.S) - q0), 1e-4);
}

TEST(DaveyStewartson, ZeroStaysZero) {
  Grid2 g = Grid2::periodic(16, 16, 2 * pi, 2 * pi);
  WaveState w{CField(g), CField(g), CField(g)};
  auto r = ds_step(w, I, {1e-3, 0.0});
  EXPECT_EQ(max_abs(r.q), 0.0);
  EXPECT_EQ(max_abs(r.v), 0.0);
}

TEST(DaveyStewartson, YIndependentIsFocusingNlse) {
  Grid2 line = Grid2::line(64, 2 * pi), g = Grid2::periodic(64, 8, 2 * pi, 2 * pi);
  CField q1 = CField::sample(line, [](double x, double) { return 0.8 + 0.3 * std::cos(x) + 0.2 * I * std::sin(2 * x); });
  CField q2(g);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) q2(i, j) = q1[i];
  const double m = mean(map(q1, [](cd z) { return std::norm(z); }));
  const double dt = 1e-4;
  const int steps = 20;
  WaveState w{q2, conj(q2), CField(g), 0.0, true};
  for (int n = 0; n < steps; ++n) {
    w = ds_step(w, I, {dt, 0.0});
    q1 = nlse_step(q1, 1, dt);
  }
  const cd ph = std::exp(-2.0 * I * m * (steps * dt));
  double err = 0;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) err = std::max(err, std::abs(w.q(i, j) - ph * q1[i]));
  EXPECT_LT(err, 1e-8);
}

TEST(DaveyStewartson, MassAndConjugateSymmetry) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  CField q = to_complex(presets::band_limited(g, 3, 0.5, 8, 0.4)) * map(presets::band_limited(g, 3, 1.0, 9), [](double x) { return std::exp(I * x); });
  WaveState w{q, conj(q), CField(g), 0.0, true};
  auto mass = [](const WaveState& s) { return integrate(s.p * s.q).real(); };
  const double m0 = mass(w);
  EvolutionConfig cfg{1e-3, 0.1};
  double defect = 0;
  w = evolve(w, cfg, [&](const WaveState& s) { return ds_step(s, I, cfg); },
             [&](const WaveState& s) { defect = std::max(defect, s.conjugate_defect); });
  EXPECT_LT(defect, 1e-10);
  EXPECT_LT(std::abs(mass(w) - m0), 1e-6);
}

TEST(Zakharov, ReducesToDaveyStewartson) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  CField q = to_complex(presets::band_limited(g, 3, 0.5, 12, 0.3)) * map(presets::band_limited(g, 3, 1.0, 13), [](double x) { return std::exp(I * x); });
  CField p = to_complex(presets::band_limited(g, 3, 0.5, 14, 0.2));
  for (cd alpha : {I, cd(0.8)}) {
    WaveState w{q, p, CField(g)};
    EvolutionConfig cfg{1e-3, 0.0};
    auto a = ds_step(w, alpha, cfg);
    auto b = zakharov_step(w, MIXParams::ishimori(alpha), cfg);
    EXPECT_LT(max_abs(a.q - b.q), 1e-10);
    EXPECT_LT(max_abs(a.p - b.p), 1e-10);
    EXPECT_LT(max_abs(a.v - b.v), 1e-10);
  }
  WaveState z{CField(g), CField(g), CField(g)};
  EXPECT_EQ(max_abs(zakharov_step(z, MIXParams{0.3, 0.1, 1.0, 0.0, 1}, {1e-3, 0.0}).q), 0.0);
}

TEST(Mix, ReducesToIshimori) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  SpinState s{random_spin(g, 31), RField(g), 0.0};
  EvolutionConfig cfg{1e-3, 0.0};
  auto a = ishimori_step(s, I, cfg);
  auto b = mix_step(s, MIXParams::ishimori(I), cfg);
  EXPECT_LT(max_diff(a.S, b.S), 1e-10);
  EXPECT_LT(max_abs(a.u - b.u), 1e-10);
  EXPECT_EQ(b.leakage, 0.0);
}

TEST(Mix, ZeroFieldsAndLeakage) {
  Grid2 g = Grid2::periodic(16, 16, 2 * pi, 2 * pi);
  SpinState s{presets::constant_spin(g), RField(g), 0.0};
  MIXParams p{0.2, -0.4, I, -0.5, 1};
  auto r = mix_step(s, p, {1e-3, 0.0});
  EXPECT_LT(max_diff(r.S, s.S), 1e-15);
  SpinState t{random_spin(g, 4), RField(g), 0.0};
  EXPECT_GT(mix_step(t, p, {1e-4, 0.0}).leakage, 0.0);
}

TEST(MI, FixedPoints) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  SpinState s{presets::constant_spin(g, {0, 1, 0}), RField(g), 0.0};
  EXPECT_LT(max_diff(mI_step(s, {1e-3, 0.0}).S, s.S), 1e-15);
  Grid2 line = Grid2::line(32, 2 * pi);
  Vec3Field S1 = presets::modulated_circle(line, 0.3), S2 = vec3(g);
  for (int c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) S2[c](i, j) = S1[c][i];
  SpinState y{S2, RField(g), 0.0};
  EXPECT_LT(max_diff(mI_step(y, {1e-3, 0.0}).S, S2), 1e-13);
}

TEST(MI, NormDrift) {
  Grid2 g = Grid2::periodic(128, 128, 4 * pi, 4 * pi);
  SpinState s{random_spin(g, 41, 0.3), RField(g), 0.0};
  EvolutionConfig cfg{1e-3, 0.1};
  s = evolve(s, cfg, [&](const SpinState& x) { return mI_step(x, cfg); });
  EXPECT_LT(unit_norm_defect(s.S), 1e-8);
}

TEST(Config, Validation) {
  EXPECT_THROW((EvolutionConfig{0.0, 1.0}.validate()), Error);
  EXPECT_THROW((EvolutionConfig{1e-3, -1.0}.validate()), Error);
  EXPECT_EQ((EvolutionConfig{1e-3, 0.1}.steps()), 100u);
}

TEST(LEquivalence, LleMatchesNlse) {
  Grid2 g = Grid2::line(256, 2 * pi);
  const double dt = 1e-4;
  EvolutionConfig cfg{dt, 0.0};
  SpinState s{presets::modulated_circle(g, 0.3), {}, 0.0};
  auto c0 = curvatures_from_spin(s.S);
  CField q = hasimoto(c0.k, c0.tau);
  CField qm = q;  // evolved with the wrong signature
  std::vector<Vec3Field> spins{s.S};
  std::vector<CField> waves{q}, wrong{qm};
  std::vector<double> times{0.0};
  for (int n = 1; n <= 5000; ++n) {
    s = lle_step(s, cfg);
    q = nlse_step(q, 1, dt);
    qm = nlse_step(qm, -1, dt);
    if (n % 100 == 0) {
      spins.push_back(s.S);
      waves.push_back(q);
      wrong.push_back(qm);
      times.push_back(n * dt);
    }
  }
  auto r = verify_L_equivalence(spins, waves, times, 1);
  EXPECT_LT(r.max_mismatch, 1e-3);
  EXPECT_LT(r.max_residual, 1e-3);
  auto bad = verify_L_equivalence(spins, wrong, times, 1);
  EXPECT_GT(bad.max_mismatch, 1e-1);
}
