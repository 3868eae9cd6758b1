#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "zsakns/equations.hpp"

using namespace zsakns;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix column(std::initializer_list<cplx> v) {
  Matrix m(static_cast<int>(v.size()), 1);
  int i = 0;
  for (const cplx& c : v) m(i++, 0) = c;
  return m;
}

DiagonalGenerator su2() { return DiagonalGenerator({1.0, -1.0}); }

DressedSolution dress(const FlowSpec& spec, std::initializer_list<std::pair<cplx, Matrix>> fs,
                      Involution inv = Involution::None) {
  DressedSolution s = vacuum_solution(spec, inv);
  for (const auto& [z, v] : fs) s = dress_solution(s, SimpleFactor::from_basis(z, v));
  return s;
}

DressedSolution nls1() { return dress(make_flow(su2(), su2(), 2), {{cplx(0.3, 0.8), column({1.0, cplx(0.5, -0.2)})}}); }

DressedSolution nls2() {
  return dress(make_flow(su2(), su2(), 2),
               {{cplx(0.3, 0.8), column({1.0, cplx(0.5, -0.2)})}, {cplx(-0.2, 0.6), column({1.0, cplx(-0.3, 0.4)})}});
}

HermitianProjector angle_projector(double f0) {
  return projector_from_basis(column({std::cos(0.5 * f0), std::sin(0.5 * f0)}));
}

// Two-grid order of a residual; the grid is refined in x and t.
template <class F>
double order(const GridSpec& g, F&& residual_on) {
  return convergence(g, residual_on).estimatedOrder;
}

ScalarField sample_scalar(const GridSpec& g, const ScalarClosure& f) { return sample(g, f); }

}  // namespace

// ---------------------------------------------------------------------------
// named residuals

TEST(Residuals, NlsSolitonsSecondOrder) {
  const GridSpec g = make_grid(-10.0, 10.0, 201, -1.0, 1.0, 41);
  const auto closed = one_soliton_closed_form(cplx(0.0, 1.0), {1.0}, 2);
  const double o1 = order(g, [&](const GridSpec& gg) {
    return residual(EquationId::NLS, ComplexField(sample(gg, closed).map([](const Matrix& m) { return m(0, 1); })));
  });
  EXPECT_NEAR(o1, 2.0, 0.3);
  for (const DressedSolution& s : {nls1(), nls2()}) {
    const double o = order(g, [&](const GridSpec& gg) { return residual(EquationId::NLS, entry(sample_field(s, gg), 0, 1)); });
    EXPECT_NEAR(o, 2.0, 0.3);
  }
}

TEST(Residuals, ZeroFieldsGiveZero) {
  const GridSpec g = make_grid(-2.0, 2.0, 21, -1.0, 1.0, 11);
  EXPECT_EQ(residual(EquationId::NLS, ComplexField(g, 0.0)).maxAbs, 0.0);
  EXPECT_EQ(residual(EquationId::mKdV, ComplexField(g, 0.0)).maxAbs, 0.0);
  EXPECT_EQ(residual(EquationId::MatrixNLS, SampledField(g, zeros(2))).maxAbs, 0.0);
  EXPECT_EQ(residual(EquationId::MatrixMKdV, SampledField(g, zeros(3))).maxAbs, 0.0);
  EXPECT_EQ(residual(EquationId::SineGordon, ScalarField(g, 0.0)).maxAbs, 0.0);
  EquationParams p;
  p.a = DiagonalGenerator({2.0, 0.5, -1.0});
  p.b = DiagonalGenerator({0.3, -1.2, 0.7});
  EXPECT_EQ(residual(EquationId::NWave, SampledField(g, zeros(3)), p).maxAbs, 0.0);
  EXPECT_LE(residual(EquationId::GNLS, SampledField(g, su2().matrix())).maxAbs, 1e-14);
  EXPECT_LE(residual(EquationId::HarmonicMapChar, SampledField(g, identity(2))).maxAbs, 1e-14);
}

TEST(Residuals, ShapeMismatch) {
  const GridSpec g = make_grid(-2.0, 2.0, 21, -1.0, 1.0, 11);
  try {
    residual(EquationId::SineGordon, ComplexField(g, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  Matrix rect = zeros(2);
  rect.resize(1, 2);
  rect.setZero();
  EXPECT_THROW(residual(EquationId::GNLS, SampledField(g, rect)), Error);
  EXPECT_THROW(residual(EquationId::NWave, SampledField(g, zeros(3))), Error);
}

TEST(Residuals, MatrixNlsOnGrassmannian) {
  const DiagonalGenerator a = grassmannian_generator(1, 2);
  const DressedSolution s = dress(make_flow(a, a, 2), {{cplx(0.2, 0.9), column({1.0, cplx(0.4, 0.1), -0.3})},
                                                       {cplx(-0.3, 0.7), column({0.5, 1.0, cplx(0.0, 0.6)})}});
  const GridSpec g = make_grid(-10.0, 10.0, 201, -1.0, 1.0, 41);
  const double o = order(g, [&](const GridSpec& gg) { return residual(EquationId::MatrixNLS, upper_block(sample_field(s, gg), 1)); });
  EXPECT_NEAR(o, 2.0, 0.3);
}

TEST(Residuals, MatrixMkdvFromRealData) {
  const DiagonalGenerator a = grassmannian_generator(1, 2);
  const DressedSolution s =
      dress(make_flow(a, a, 3), {{cplx(0.0, 0.8), column({1.0, 0.5, -0.3})}, {cplx(0.0, 0.5), column({0.4, 1.0, 0.7})}});
  const GridSpec g = make_grid(-12.0, 12.0, 241, -1.0, 1.0, 41);
  const SampledField b = upper_block(sample_field(s, g), 1);
  double imag = 0.0;
  for (const Matrix& m : b.values()) imag = std::max(imag, m.imag().cwiseAbs().maxCoeff());
  EXPECT_LE(imag, 1e-12);
  const double o = order(g, [&](const GridSpec& gg) { return residual(EquationId::MatrixMKdV, upper_block(sample_field(s, gg), 1)); });
  EXPECT_NEAR(o, 2.0, 0.3);
}

// For a real solution v of v_t = -(v_xxx + 6 v^2 v_x)/4, w = i v(-x, t)
// solves v_t = (v_xxx - 6 v^2 v_x)/4.
TEST(Residuals, ScalarMkdv) {
  const DressedSolution s = dress(make_flow(su2(), su2(), 3), {{cplx(0.0, 0.7), column({1.0, 0.6})}});
  const auto w = [&](const GridSpec& gg) {
    return sample(gg, [&](double x, double t) { return cplx(0.0, 1.0) * field_eval(s, -x, t)(0, 1); });
  };
  const GridSpec g = make_grid(-12.0, 12.0, 241, -1.0, 1.0, 41);
  EXPECT_NEAR(order(g, [&](const GridSpec& gg) { return residual(EquationId::mKdV, w(gg)); }), 2.0, 0.3);
}

TEST(Residuals, SineGordonClosedForms) {
  const GridSpec g = make_grid(-8.0, 8.0, 161, -2.0, 2.0, 41);
  const auto kink = [](double x, double t) { return 4.0 * std::atan(std::exp(x + t)); };
  EXPECT_NEAR(order(g, [&](const GridSpec& gg) { return residual(EquationId::SineGordon, sample_scalar(gg, kink)); }), 2.0, 0.3);
  EquationParams half;
  half.sg_coefficient = 0.5;
  const auto kink2 = [](double x, double t) { return 4.0 * std::atan(std::exp(x + 0.5 * t)); };
  EXPECT_NEAR(order(g, [&](const GridSpec& gg) { return residual(EquationId::SineGordon, sample_scalar(gg, kink2), half); }), 2.0,
              0.3);
  EquationParams neg;
  neg.sg_coefficient = -1.0;
  const auto br = [](double x, double t) { return breather_closed_form(0.6, x, t); };
  EXPECT_NEAR(order(g, [&](const GridSpec& gg) { return residual(EquationId::SineGordon, sample_scalar(gg, br), neg); }), 2.0, 0.3);
}

TEST(Residuals, NWaveFromDressing) {
  const DiagonalGenerator a({2.0, 0.5, -1.0});
  const DiagonalGenerator b({0.3, -1.2, 0.7});
  const DressedSolution s = dress(make_flow(a, b, 1), {{cplx(0.1, 0.7), column({1.0, cplx(0.4, 0.3), 0.8})}});
  EquationParams p;
  p.a = a;
  p.b = b;
  const GridSpec g = make_grid(-10.0, 10.0, 201, -1.0, 1.0, 41);
  EXPECT_NEAR(order(g, [&](const GridSpec& gg) { return residual(EquationId::NWave, sample_field(s, gg), p); }), 2.0, 0.3);
}

// ---------------------------------------------------------------------------
// zero curvature

TEST(ZeroCurvature, VacuumVanishes) {
  const GridSpec g = make_grid(-3.0, 3.0, 31, -1.0, 1.0, 11);
  const DressedSolution v = vacuum_solution(make_flow(su2(), su2(), 2));
  EXPECT_LE(zero_curvature_residual(v, default_spectral_samples(2), g).maxAbs, 1e-13);
  const DressedSolution w = vacuum_solution(sine_gordon_flow());
  EXPECT_LE(zero_curvature_residual(w, default_spectral_samples(-1), g).maxAbs, 1e-13);
}

TEST(ZeroCurvature, SolitonsSecondOrder) {
  const GridSpec g = make_grid(-10.0, 10.0, 201, -1.0, 1.0, 41);
  for (const DressedSolution& s : {nls1(), nls2()}) {
    const auto pair = convergence(g, [&](const GridSpec& gg) { return zero_curvature_residual(s, default_spectral_samples(2), gg); });
    EXPECT_NEAR(pair.estimatedOrder, 2.0, 0.3);
  }
  const DiagonalGenerator a({2.0, 0.5, -1.0});
  const DiagonalGenerator b({0.3, -1.2, 0.7});
  const DressedSolution nw = dress(make_flow(a, b, 1), {{cplx(0.1, 0.7), column({1.0, cplx(0.4, 0.3), 0.8})}});
  const auto pair = convergence(make_grid(-15.0, 15.0, 301, -1.0, 1.0, 41),
                                [&](const GridSpec& gg) { return zero_curvature_residual(nw, default_spectral_samples(1), gg); });
  EXPECT_NEAR(pair.estimatedOrder, 2.0, 0.3);
}

TEST(ZeroCurvature, NegativeFlowKink) {
  const DressedSolution kink = dress(sine_gordon_flow(), {{cplx(0.0, 0.5), column({1.0, 1.0})}});
  const GridSpec g = make_grid(-30.0, 10.0, 1601, -1.0, 1.0, 41);
  const auto pair = convergence(g, [&](const GridSpec& gg) { return zero_curvature_residual(kink, default_spectral_samples(-1), gg); });
  EXPECT_NEAR(pair.estimatedOrder, 2.0, 0.3);
  EXPECT_THROW(zero_curvature_residual(kink, {cplx(0.0, 0.0)}, g), Error);
}

// ---------------------------------------------------------------------------
// classical Backlund transformation

TEST(Backlund, VacuumKink) {
  const GridSpec g = make_grid(-5.0, 5.0, 1001, -1.0, 1.0, 201);
  const BacklundResult r = classical_backlund_sg(ScalarField(g, 0.0), 0.5, kPi);
  double worst = 0.0;
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix)
      worst = std::max(worst, std::abs(r.qstar(ix, it) - 4.0 * std::atan(std::exp(g.x.at(ix) + g.t.at(it)))));
  EXPECT_LE(worst, 1e-8);
  EXPECT_LE(r.compatibility_drift, 1e-8);
  EXPECT_LE(r.residual.maxAbs, 1e-4);
  const BacklundResult triv = classical_backlund_sg(ScalarField(g, 0.0), 0.5, 0.0);
  for (double v : triv.qstar.values()) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(vacuum_kink(0.5, kPi, 0.3, -0.2), 4.0 * std::atan(std::exp(0.1)), 1e-14);
}

TEST(Backlund, OutputSolvesSineGordon) {
  const GridSpec g = make_grid(-6.0, 6.0, 241, -1.0, 1.0, 41);
  const auto run = [&](const GridSpec& gg) {
    const ScalarField q = sample(gg, [](double x, double t) { return vacuum_kink(0.5, 1.0, x, t); });
    const BacklundResult r = classical_backlund_sg(q, 1.0 / 3.0, 2.0);
    return report_of(sine_gordon_residual(r.qstar));
  };
  EXPECT_NEAR(convergence(g, run).estimatedOrder, 2.0, 0.3);
}

TEST(Backlund, RoleSwapSymmetry) {
  const GridSpec g = make_grid(-6.0, 6.0, 241, -1.0, 1.0, 41);
  const ScalarField q = sample(g, [](double x, double t) { return vacuum_kink(0.5, 1.0, x, t); });
  const BacklundResult r = classical_backlund_sg(q, 0.7, 2.5);
  const ScalarField a = backlund_residual(q, r.qstar, 0.7), b = backlund_residual(r.qstar, q, -0.7);
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
}

TEST(Backlund, CompatibilityDriftOnNonSolution) {
  const GridSpec g = make_grid(-3.0, 3.0, 121, -1.0, 1.0, 41);
  const ScalarField q = sample(g, [](double x, double t) { return std::exp(-x * x) * (1.0 + t); });
  try {
    classical_backlund_sg(q, 0.5, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CompatibilityDrift);
  }
  EXPECT_THROW(classical_backlund_sg(ScalarField(make_grid(0.5, 3.0, 11, -1.0, 1.0, 5), 0.0), 0.5, 1.0), Error);
  EXPECT_THROW(classical_backlund_sg(ScalarField(g, 0.0), 0.0, 1.0), Error);
}

TEST(Backlund, DressingKinkMatchesClassical) {
  for (double s : {0.5, 1.0 / 3.0, 1.2})
    for (double c0 : {1.0, kPi, 2.5}) {
      const DressedSolution d = dress_solution(vacuum_solution(sine_gordon_flow()), SimpleFactor::make(cplx(0.0, s), angle_projector(0.5 * c0)));
      for (double x : {-1.0, 0.0, 0.7})
        for (double t : {-0.5, 0.0, 0.4}) {
          const double raw = sine_gordon_angle_raw(d, x, t);
          const double k = vacuum_kink(s, c0, x, t);
          EXPECT_NEAR(std::remainder(raw - k, 2.0 * kPi), 0.0, 1e-10) << "s " << s << " c0 " << c0;
        }
    }
}

TEST(Permutability, BianchiAgainstBacklundAndDressing) {
  const double s1 = 0.5, s2 = 1.0 / 3.0, c1 = 1.0, c2 = 2.0;
  const GridSpec g = make_grid(-8.0, 8.0, 801, -2.0, 2.0, 201);
  const ScalarField q0(g, 0.0);
  const ScalarField q1 = classical_backlund_sg(q0, s1, c1).qstar;
  const ScalarField q2 = classical_backlund_sg(q0, s2, c2).qstar;
  const PermutabilityResult p = sg_permutability(q0, q1, q2, s1, s2);
  const auto [ix0, it0] = origin_node(g);
  const double d = p.q3(ix0, it0);

  // classical path: B_{s2, d}(q1)
  const ScalarField q3b = classical_backlund_sg(q1, s2, d).qstar;
  EXPECT_LE(max_abs_diff(p.q3, q3b), 1e-6);

  // dressing path: factors (i s1, f0 = c1/2), then (i s2, f0 = (c1 + d)/2)
  DressedSolution ds = vacuum_solution(sine_gordon_flow());
  ds = dress_solution(ds, SimpleFactor::make(cplx(0.0, s1), angle_projector(0.5 * c1)));
  ds = dress_solution(ds, SimpleFactor::make(cplx(0.0, s2), angle_projector(0.5 * (c1 + d))));
  double worst = 0.0;
  for (int it = 0; it < g.nt(); it += 10)
    for (int ix = 0; ix < g.nx(); ix += 10) {
      const double raw = sine_gordon_angle_raw(ds, g.x.at(ix), g.t.at(it));
      worst = std::max(worst, std::abs(std::remainder(raw - p.q3(ix, it), 2.0 * kPi)));
    }
  EXPECT_LE(worst, 1e-6);
}

TEST(Permutability, ResidualSecondOrder) {
  const GridSpec g = make_grid(-6.0, 6.0, 241, -1.0, 1.0, 41);
  const auto run = [&](const GridSpec& gg) {
    const ScalarField q1 = sample(gg, [](double x, double t) { return vacuum_kink(0.5, 1.0, x, t); });
    const ScalarField q2 = sample(gg, [](double x, double t) { return vacuum_kink(1.0 / 3.0, 2.0, x, t); });
    return sg_permutability(ScalarField(gg, 0.0), q1, q2, 0.5, 1.0 / 3.0).residual;
  };
  EXPECT_NEAR(convergence(g, run).estimatedOrder, 2.0, 0.3);
  EXPECT_THROW(sg_permutability(ScalarField(g, 0.0), ScalarField(g, 0.0), ScalarField(g, 0.0), 0.5, -0.5), Error);
}

TEST(Permutability, BranchJumpOnCoarseGrid) {
  const GridSpec g = make_grid(-6.0, 6.0, 7, -1.0, 1.0, 5);
  const ScalarField q1 = sample(g, [](double x, double t) { return vacuum_kink(3.0, 1.0, x, t); });
  const ScalarField q2 = sample(g, [](double x, double t) { return vacuum_kink(2.5, 2.0, x, t); });
  try {
    sg_permutability(ScalarField(g, 0.0), q1, q2, 3.0, 2.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BranchJump);
  }
}

// ---------------------------------------------------------------------------
// Lie transformation

TEST(Lie, IdentityAndKinkScaling) {
  const ScalarClosure k1 = [](double x, double t) { return vacuum_kink(1.0, 1.3, x, t); };
  const ScalarClosure id = lie_transform(k1, 1.0);
  const ScalarClosure ks = lie_transform(k1, 0.4);
  for (double x : {-1.0, 0.2, 2.0})
    for (double t : {-0.7, 0.5}) {
      EXPECT_EQ(id(x, t), k1(x, t));
      EXPECT_NEAR(ks(x, t), vacuum_kink(0.4, 1.3, x, t), 1e-14);
    }
  EXPECT_THROW(lie_transform(k1, 0.0), Error);
}

// B_{s,c0} = L_s B_{1,c0} L_s^{-1} on a kink-seeded solution.
TEST(Lie, ConjugatesBacklund) {
  const double s = 0.6, c0 = 2.2;
  const GridSpec g = make_grid(-5.0, 5.0, 401, -1.0, 1.0, 81);
  const ScalarClosure q0 = [](double x, double t) { return vacuum_kink(0.8, 1.0, x, t); };
  const ScalarField direct = classical_backlund_sg(sample(g, q0), s, c0).qstar;
  const GridSpec gs = lie_grid(g, s);
  const ScalarField seeded = sample(gs, lie_transform(q0, 1.0 / s));
  const ScalarField unit = classical_backlund_sg(seeded, 1.0, c0).qstar;
  EXPECT_LE(max_abs_diff(direct, unit), 1e-8);
}

// ---------------------------------------------------------------------------
// gauge constructions

TEST(Gnls, ZeroFieldAndSoliton) {
  const GridSpec g0 = make_grid(-2.0, 2.0, 41, -1.0, 1.0, 21);
  Matrix zb(1, 1);
  zb(0, 0) = 0.0;
  const GnlsResult z = gnls_gauge_transform(SampledField(g0, zb));
  for (const Matrix& p : z.phi.values()) EXPECT_EQ(max_abs(Matrix(p - su2().matrix())), 0.0);
  EXPECT_EQ(z.residual.maxAbs, 0.0);

  const DiagonalGenerator a = grassmannian_generator(1, 2);
  const DressedSolution s = dress(make_flow(a, a, 2), {{cplx(0.2, 0.9), column({1.0, cplx(0.4, 0.1), -0.3})}});
  const auto run = [&](const GridSpec& gg) { return gnls_gauge_transform(upper_block(sample_field(s, gg), 1), 2, 1e-4); };
  const GridSpec g = make_grid(-8.0, 8.0, 321, -1.0, 1.0, 81);
  const GnlsResult coarse = run(g), fine = run(g.refined());
  EXPECT_NEAR(std::log2(coarse.residual.maxAbs / fine.residual.maxAbs), 2.0, 0.3);
  EXPECT_LE(fine.spectrum_drift, 1e-9);
  double worst = 0.0;
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix)
      worst = std::max(worst, max_abs(Matrix(coarse.g(ix, it) - frame_eval(s, g.x.at(ix), g.t.at(it), cplx(0.0, 0.0)))));
  EXPECT_LE(worst, 1e-4);
}

TEST(Gnls, CompatibilityDriftOnNonSolution) {
  const GridSpec g = make_grid(-3.0, 3.0, 61, -1.0, 1.0, 21);
  const SampledField b = sample(g, [](double x, double t) {
    Matrix m(1, 1);
    m(0, 0) = std::exp(-x * x) * (1.0 + t * t);
    return m;
  });
  try {
    gnls_gauge_transform(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CompatibilityDrift);
  }
}

TEST(HarmonicMap, VacuumAndBreather) {
  const GridSpec g = make_grid(-2.0, 2.0, 41, -1.0, 1.0, 21);
  const DressedSolution v = vacuum_solution(breather_flow());
  const HarmonicMapResult hv = harmonic_map_from_frame(v, g);
  const Matrix am = breather_flow().a.matrix();
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double tau = g.x.at(ix) + g.t.at(it);
      Matrix e = zeros(2);
      for (int k = 0; k < 2; ++k) e(k, k) = std::exp(-2.0 * am(k, k) * tau);
      EXPECT_LE(max_abs(Matrix(hv.s(ix, it) - e)), 1e-14);
    }
  EXPECT_LE(report_of(harmonic_map_residual(hv.s), 2).maxAbs, 1e-12);

  const DressedSolution br = build_breather(0.6, angle_projector(kPi / 2));
  const GridSpec gb = make_grid(-8.0, 8.0, 161, -1.0, 1.0, 41);
  const HarmonicMapResult c = harmonic_map_from_frame(br, gb), f = harmonic_map_from_frame(br, gb.refined());
  EXPECT_NEAR(std::log2(c.residual.maxAbs / f.residual.maxAbs), 2.0, 0.3);
  EXPECT_LE(c.eigen_drift, 1e-8);
  EXPECT_THROW(harmonic_map_from_frame(nls1(), g), Error);
}
