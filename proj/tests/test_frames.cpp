#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "mfsol/frames.hpp"
#include "mfsol/presets.hpp"

using namespace mfsol;

namespace {

RMat rot(int axis, double a) {
  double c = std::cos(a), s = std::sin(a);
  if (axis == 0) return RMat(3, {1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c});
  if (axis == 1) return RMat(3, {c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c});
  return RMat(3, {c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0});
}

// Rows of the returned matrix are e1, e2, e3; periodic in x and y on [0,2π)².
RMat analytic_frame(double x, double y, double t) {
  double a = x + 0.3 * std::sin(y + t);
  double b = 0.4 * std::sin(x) * std::cos(y) + 0.2 * t;
  double c = 0.5 * std::cos(x + 2 * y - t);
  return transpose(rot(2, a) * rot(1, b) * rot(0, c));
}

FrameField frame_on(const Grid2& g, double t) {
  FrameField f{vec3(g), vec3(g), vec3(g), 1, {}};
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      RMat E = analytic_frame(g.x(i), g.y(j), t);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) f.e(r)[c](i, j) = E(r, c);
    }
  return f;
}

// ω from E_t Eᵀ with an 8th-order central difference in t.
CurvatureSet full_set(const Grid2& g, double t) {
  CurvatureSet s = curvatures_from_frame(frame_on(g, t));
  const double h = 1e-2;
  const double w[4] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
  s.w1 = RField(g), s.w2 = RField(g), s.w3 = RField(g);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      RMat Et(3);
      for (int m = 1; m <= 4; ++m)
        Et += (analytic_frame(g.x(i), g.y(j), t + m * h) - analytic_frame(g.x(i), g.y(j), t - m * h)) *
              (w[m - 1] / h);
      RMat G = Et * transpose(analytic_frame(g.x(i), g.y(j), t));
      s.w3(i, j) = G(0, 1);
      s.w2(i, j) = -G(0, 2);
      s.w1(i, j) = G(1, 2);
    }
  return s;
}

CurvatureSet xy_set(const Grid2& g, const RField& k, const RField& sigma, const RField& tau) {
  CurvatureSet s;
  s.k = k, s.sigma = sigma, s.tau = tau;
  s.m1 = RField(g), s.m2 = RField(g), s.m3 = RField(g);
  return s;
}

}  // namespace

TEST(AssembleConnection, Examples) {
  Grid2 g = Grid2::line(16, 1.0);
  CurvatureSet s = xy_set(g, RField(g), RField(g), RField(g));
  EXPECT_EQ(assemble_connection(s, Direction::x).max_abs(), 0.0);
  s.k = RField(g, 1.0);
  RMat C = assemble_connection(s, Direction::x)[3];
  EXPECT_EQ(C(0, 1), 1.0);
  EXPECT_EQ(C(1, 0), -1.0);
  EXPECT_EQ(std::abs(C(0, 2)) + std::abs(C(1, 2)) + std::abs(C(2, 0)) + std::abs(C(2, 1)), 0.0);
  s.beta = -1;
  EXPECT_EQ(assemble_connection(s, Direction::x)[0](1, 0), 1.0);
  EXPECT_THROW(assemble_connection(s, Direction::t), Error);
}

TEST(ZeroCurvature, ConstantCommuting) {
  Grid2 g = Grid2::periodic(8, 8, 1, 1);
  RMatField P(g, 3), Q(g, 3), Z(g, 3);
  for (std::size_t k = 0; k < P.size(); ++k) {
    P[k] = RMat::identity(3) * 2.0;
    Q[k] = RMat(3, {1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 3.0});
  }
  EXPECT_EQ(zero_curvature_residual(P, Q, Z, Z).max_abs(), 0.0);
}

TEST(ZeroCurvature, ShapeMismatchThrows) {
  Grid2 g = Grid2::periodic(8, 8, 1, 1), h = Grid2::periodic(16, 8, 1, 1);
  EXPECT_THROW(zero_curvature_residual(RMatField(g, 3), RMatField(h, 3), RMatField(g, 3), RMatField(g, 3)), Error);
  EXPECT_THROW(zero_curvature_residual(RMatField(g, 3), RMatField(g, 2), RMatField(g, 3), RMatField(g, 3)), Error);
}

TEST(ZeroCurvature, ProjectedFrameConnections) {
  Grid2 g = Grid2::periodic(256, 256, 2 * pi, 2 * pi);
  CurvatureSet s = curvatures_from_frame(frame_on(g, 0.0));
  RMatField C = assemble_connection(s, Direction::x), D = assemble_connection(s, Direction::y);
  RMatField r = zero_curvature_residual(C, D, diff(C, 0, 1), diff(D, 1, 0));
  EXPECT_LT(r.max_abs(), 1e-6);
  // antisymmetry under swapping the roles of the two directions
  RMatField r2 = zero_curvature_residual(D, C, diff(D, 1, 0), diff(C, 0, 1));
  double m = 0;
  for (std::size_t k = 0; k < r.size(); ++k) m = std::max(m, (r[k] + r2[k]).max_abs());
  EXPECT_LT(m, 1e-12);
}

TEST(ZeroCurvature, ScalarFormsMatchMatrixEntries) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  for (int beta : {1, -1}) {
    CurvatureSet s;
    s.beta = beta;
    s.k = presets::band_limited(g, 3, 1.0, 1), s.sigma = presets::band_limited(g, 3, 1.0, 2);
    s.tau = presets::band_limited(g, 3, 1.0, 3), s.m1 = presets::band_limited(g, 3, 1.0, 4);
    s.m2 = presets::band_limited(g, 3, 1.0, 5), s.m3 = presets::band_limited(g, 3, 1.0, 6);
    RMatField C = assemble_connection(s, Direction::x), D = assemble_connection(s, Direction::y);
    ScalarTriple m = scalar_components(zero_curvature_residual(C, D, diff(C, 0, 1), diff(D, 1, 0)));
    ScalarTriple d = xy_compatibility(s);
    EXPECT_LT(max_abs(m.a - d.a), 1e-12);
    EXPECT_LT(max_abs(m.b - d.b), 1e-12);
    EXPECT_LT(max_abs(m.c - d.c), 1e-12);
    EXPECT_GT(d.max_abs(), 1e-3);  // random data is not a solution
  }
}

TEST(IntegrateFrame, PureRotationClosesAfterPeriod) {
  Grid2 g = Grid2::line(128, 2 * pi);
  CurvatureSet s = xy_set(g, RField(g, 1.0), RField(g), RField(g));
  FrameField f = integrate_frame_x(RMat::identity(3), assemble_connection(s, Direction::x), 1);
  EXPECT_LT((f.monodromy[0] - RMat::identity(3)).max_abs(), 1e-8);
  EXPECT_NEAR(f.e1[0][32], std::cos(pi / 2), 1e-8);
  EXPECT_NEAR(f.e1[1][32], std::sin(pi / 2), 1e-8);
}

TEST(IntegrateFrame, ZeroConnectionIsConstant) {
  Grid2 g = Grid2::line(32, 1.0);
  CurvatureSet s = xy_set(g, RField(g), RField(g), RField(g));
  RMat init = transpose(rot(0, 0.3) * rot(2, 1.1));
  FrameField f = integrate_frame_x(init, assemble_connection(s, Direction::x), 1);
  for (std::size_t i = 0; i < g.nx; ++i) EXPECT_LT((f.at(i) - init).max_abs(), 1e-14);
}

TEST(IntegrateFrame, NonFiniteInputThrows) {
  Grid2 g = Grid2::line(32, 1.0);
  CurvatureSet s = xy_set(g, RField(g, std::nan("")), RField(g), RField(g));
  EXPECT_THROW(integrate_frame_x(RMat::identity(3), assemble_connection(s, Direction::x), 1), Error);
}

TEST(IntegrateFrame, RoundTripBandLimited) {
  Grid2 g = Grid2::line(256, 2 * pi);
  RField k = presets::band_limited(g, 4, 0.8, 11, 1.0);
  RField tau = presets::band_limited(g, 4, 0.8, 12, 0.4);
  auto t0 = std::chrono::steady_clock::now();
  FrameField f = integrate_frame_x(RMat::identity(3),
                                   assemble_connection(xy_set(g, k, RField(g), tau), Direction::x), 1);
  CurvatureSet back = curvatures_from_frame(f);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(max_abs(back.k - k), 1e-6);
  EXPECT_LT(max_abs(back.tau - tau), 1e-6);
  EXPECT_LT(max_abs(back.sigma), 1e-6);
  EXPECT_LT(frame_orthonormality_defect(f), 1e-8);
  EXPECT_LT(secs, 5.0);
}

TEST(IntegrateFrame, SigmaRoundTrip) {
  Grid2 g = Grid2::line(128, 2 * pi);
  RField k = presets::band_limited(g, 3, 0.5, 21, 0.7);
  RField sg = presets::band_limited(g, 3, 0.5, 22);
  RField tau = presets::band_limited(g, 3, 0.5, 23, -0.3);
  FrameField f = integrate_frame_x(RMat::identity(3), assemble_connection(xy_set(g, k, sg, tau), Direction::x), 1);
  CurvatureSet back = curvatures_from_frame(f);
  EXPECT_LT(max_abs(back.k - k), 1e-6);
  EXPECT_LT(max_abs(back.sigma - sg), 1e-6);
  EXPECT_LT(max_abs(back.tau - tau), 1e-6);
}

TEST(CurvaturesFromFrame, ConstantsAndErrors) {
  Grid2 g = Grid2::line(128, 2 * pi);
  FrameField c = integrate_frame_x(RMat::identity(3),
                                   assemble_connection(xy_set(g, RField(g), RField(g), RField(g)), Direction::x), 1);
  CurvatureSet z = curvatures_from_frame(c);
  EXPECT_LT(max_abs(z.k) + max_abs(z.tau) + max_abs(z.sigma), 1e-14);

  FrameField f = integrate_frame_x(RMat::identity(3),
                                   assemble_connection(xy_set(g, RField(g, 1.0), RField(g), RField(g, 0.5)), Direction::x), 1);
  CurvatureSet s = curvatures_from_frame(f);
  EXPECT_LT(max_abs(s.k - 1.0), 1e-8);
  EXPECT_LT(max_abs(s.tau - 0.5), 1e-8);
  f.beta = -1;
  EXPECT_THROW(curvatures_from_frame(f), Error);
}

TEST(CurvaturesFromFrame, HelixFrame) {
  // e1 = (cos ω0x, sin ω0x, 0), e2 = (−sin, cos, 0), e3 = ẑ: rotation about ẑ at rate ω0
  const double w0 = 3.0;
  Grid2 g = Grid2::line(64, 2 * pi);
  FrameField f{vec3(g), vec3(g), vec3(g), 1, {}};
  for (std::size_t i = 0; i < g.nx; ++i) {
    double x = g.x(i);
    f.e1[0][i] = std::cos(w0 * x), f.e1[1][i] = std::sin(w0 * x);
    f.e2[0][i] = -std::sin(w0 * x), f.e2[1][i] = std::cos(w0 * x);
    f.e3[2][i] = 1.0;
  }
  CurvatureSet s = curvatures_from_frame(f);
  EXPECT_LT(max_abs(s.k - w0), 1e-10);
  EXPECT_LT(max_abs(s.tau) + max_abs(s.sigma), 1e-10);
  // tilting e2 out of the osculating plane moves part of the rotation into σ
  const double a = 0.3;
  FrameField t = f;
  t.e2 = std::cos(a) * f.e2 + std::sin(a) * f.e3;
  t.e3 = std::cos(a) * f.e3 - std::sin(a) * f.e2;
  CurvatureSet u = curvatures_from_frame(t);
  EXPECT_LT(max_abs(u.k - w0 * std::cos(a)), 1e-10);
  EXPECT_LT(max_abs(u.sigma - w0 * std::sin(a)), 1e-10);
  EXPECT_LT(max_abs(u.k * u.k + u.sigma * u.sigma - w0 * w0), 1e-9);
}

TEST(TripleProduct, TrivialFields) {
  Grid2 g = Grid2::periodic(32, 32, 2 * pi, 2 * pi);
  EXPECT_EQ(max_abs(triple_product_density(presets::constant_spin(g))), 0.0);
  EXPECT_LT(max_abs(triple_product_density(presets::modulated_circle(g, 0.3))), 1e-14);
  EXPECT_EQ(topological_charge(presets::constant_spin(g)), 0.0);
}

TEST(TopologicalCharge, InstantonDegreeOne) {
  Grid2 g = Grid2::periodic(256, 256, 40, 40, -20, -20);
  Vec3Field S = presets::instanton(g, 1.0);
  double q = topological_charge(S);
  EXPECT_NEAR(q, 1.0, 2e-3);
  // refinement: the quadrature is converged
  Grid2 h = Grid2::periodic(384, 384, 40, 40, -20, -20);
  EXPECT_NEAR(topological_charge(presets::instanton(h, 1.0)), q, 1e-4);
}

TEST(TopologicalCharge, SymmetriesAndRotationInvariance) {
  Grid2 g = Grid2::periodic(128, 128, 32, 32);
  Vec3Field S = presets::instanton(g, 2.0, 5.0);
  double q = topological_charge(S);
  Vec3Field neg = -1.0 * S;
  EXPECT_NEAR(topological_charge(neg) + q, 0.0, 1e-12);
  Vec3Field swapped = vec3(g);
  for (int c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) swapped[c](i, j) = S[c](j, i);
  EXPECT_NEAR(topological_charge(swapped) + q, 0.0, 1e-10);
  EXPECT_NEAR(topological_charge(-1.0 * swapped), q, 1e-10);
  RMat R = rot(0, 0.7) * rot(1, -1.3) * rot(2, 2.1);
  Vec3Field rs = vec3(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    for (int a = 0; a < 3; ++a) rs[a][k] = R(a, 0) * S[0][k] + R(a, 1) * S[1][k] + R(a, 2) * S[2][k];
  EXPECT_NEAR(topological_charge(rs), q, 1e-10);
}

TEST(TripleProductForms, HoldOnConsistentFrames) {
  Grid2 g = Grid2::periodic(128, 128, 2 * pi, 2 * pi);
  FrameField f = frame_on(g, 0.2);
  ScalarTriple r = triple_product_forms(f, curvatures_from_frame(f));
  EXPECT_LT(r.max_abs(), 1e-6);
}

TEST(Compatibility, TimeDirectionsOnAnalyticFrame) {
  Grid2 g = Grid2::periodic(64, 64, 2 * pi, 2 * pi);
  CurvatureTrajectory tr;
  tr.dt = 1e-3;
  for (int s = -2; s <= 2; ++s) tr.slices.push_back(full_set(g, 0.1 + s * tr.dt));
  const CurvatureSet& c = tr.slices[2];
  auto td = [&](auto member) {
    return ((tr.slices[0].*member) - 8.0 * (tr.slices[1].*member) + 8.0 * (tr.slices[3].*member) -
            (tr.slices[4].*member)) * (1.0 / (12 * tr.dt));
  };
  EXPECT_LT(xt_compatibility(c, td(&CurvatureSet::k), td(&CurvatureSet::sigma), td(&CurvatureSet::tau)).max_abs(), 1e-6);
  EXPECT_LT(yt_compatibility(c, td(&CurvatureSet::m1), td(&CurvatureSet::m2), td(&CurvatureSet::m3)).max_abs(), 1e-6);
}

TEST(ConservationResidual, ZeroAndAnalyticAndDetection) {
  Grid2 g = Grid2::periodic(64, 64, 2 * pi, 2 * pi);
  CurvatureTrajectory zero;
  zero.dt = 0.1;
  CurvatureSet z = xy_set(g, RField(g), RField(g), RField(g));
  z.w1 = z.w2 = z.w3 = RField(g);
  zero.slices.assign(5, z);
  EXPECT_EQ(conservation_residual(zero).max_abs(), 0.0);

  CurvatureTrajectory tr;
  tr.dt = 1e-3;
  for (int s = -2; s <= 2; ++s) tr.slices.push_back(full_set(g, 0.1 + s * tr.dt));
  EXPECT_LT(conservation_residual(tr).max_abs(), 1e-6);
  EXPECT_GT(conservation_residual(tr, DiffScheme::spectral, true).max_abs(), 1e-2);

  CurvatureTrajectory bad = tr;
  for (int s = 0; s < 5; ++s) bad.slices[s].w1 = presets::band_limited(g, 3, 1.0, 40 + s);
  EXPECT_GT(conservation_residual(bad).max_abs(), 1e-2);

  CurvatureTrajectory missing = tr;
  missing.slices[2].w2 = RField();
  EXPECT_THROW(conservation_residual(missing), Error);
}

TEST(M0Decompose, LinearCombinations) {
  Grid2 g = Grid2::periodic(128, 128, 32, 32);
  Vec3Field S = presets::instanton(g, 2.0, 5.0);
  Vec3Field Sx = diff(S, 1, 0), Sy = diff(S, 0, 1);
  Sx = Sx - dot(S, Sx) * S;  // exact tangency
  Sy = Sy - dot(S, Sy) * S;
  // tangent frame: e2 from S_x away from the degenerate points, then e3 = S × e2
  Vec3Field ref = presets::constant_spin(g, {0.3, 0.5, 0.81});
  Vec3Field e2 = normalized(cross(S, ref));
  Vec3Field e3 = cross(S, e2);
  // keep samples with a well-conditioned tangent pair
  RField det = dot(Sx, e2) * dot(Sy, e3) - dot(Sx, e3) * dot(Sy, e2);
  Grid2 line = Grid2::line(64, 1.0);
  Vec3Field s = vec3(line), a2 = vec3(line), a3 = vec3(line), sx = vec3(line), sy = vec3(line);
  std::size_t n = 0;
  for (std::size_t k = 0; k < g.size() && n < 64; ++k)
    if (std::abs(det[k]) > 1e-3) {
      for (int q = 0; q < 3; ++q) {
        s[q][n] = S[q][k], a2[q][n] = e2[q][k], a3[q][n] = e3[q][k];
        sx[q][n] = Sx[q][k], sy[q][n] = Sy[q][k];
      }
      ++n;
    }
  ASSERT_EQ(n, 64u);
  M0Coefficients t = m0_decompose(s, a2, a3, sx, sx, sy);
  EXPECT_LT(max_abs(t.d2 - 1.0) + max_abs(t.d3), 1e-8);
  Vec3Field st = 2.0 * sx + 3.0 * sy;
  M0Coefficients m = m0_decompose(s, a2, a3, st, sx, sy);
  EXPECT_LT(max_abs(m.d2 - 2.0), 1e-8);
  EXPECT_LT(max_abs(m.d3 - 3.0), 1e-8);
  EXPECT_LT(m0_reconstruction_residual(m, a2, a3, st, sx, sy), 1e-8);
  EXPECT_THROW(m0_decompose(s, a2, a3, st, sx, sx), Error);
}
