#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "zsakns/grid.hpp"

using namespace zsakns;

TEST(FiniteDifference, ConstantHasZeroDerivative) {
  const std::vector<double> f(11, 3.5);
  for (int order = 1; order <= 3; ++order)
    for (double v : fd_derivative(f, 0.1, order)) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(FiniteDifference, SineFirstDerivative) {
  const GridSpec g = make_grid(-std::numbers::pi, std::numbers::pi, 401);
  const ScalarField f = sample(g, [](double x, double) { return std::sin(x); });
  const ScalarField d = fd_derivative(f, AxisId::X, 1);
  double worst = 0.0;
  for (int i = 0; i < g.nx(); ++i) worst = std::max(worst, std::abs(d(i) - std::cos(g.x.at(i))));
  EXPECT_LE(worst, 1e-4);
}

TEST(FiniteDifference, CubicThirdDerivativeExact) {
  const GridSpec g = make_grid(-1.0, 2.0, 31);
  const ScalarField f = sample(g, [](double x, double) { return x * x * x - 2.0 * x; });
  const ScalarField d3 = fd_derivative(f, AxisId::X, 3);
  for (int i = 0; i < g.nx(); ++i) EXPECT_NEAR(d3(i), 6.0, 1e-8);
  const ScalarField d2 = fd_derivative(f, AxisId::X, 2);
  for (int i = 0; i < g.nx(); ++i) EXPECT_NEAR(d2(i), 6.0 * g.x.at(i), 1e-9);
}

TEST(FiniteDifference, SecondOrderConvergence) {
  const auto exact = [](int order, double x) {
    switch (order) {
      case 1: return 2.0 * std::cos(2.0 * x);
      case 2: return -4.0 * std::sin(2.0 * x);
      default: return -8.0 * std::cos(2.0 * x);
    }
  };
  for (int order = 1; order <= 3; ++order) {
    double err[2];
    int idx = 0;
    for (int n : {201, 401}) {
      const GridSpec g = make_grid(0.0, 2.0, n);
      const ScalarField f = sample(g, [](double x, double) { return std::sin(2.0 * x); });
      const ScalarField d = fd_derivative(f, AxisId::X, order);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(d(i) - exact(order, g.x.at(i))));
      err[idx++] = worst;
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.3) << "order " << order << " errors " << err[0] << " " << err[1];
  }
}

TEST(FiniteDifference, FourthOrderAccuracy) {
  double err[2];
  int idx = 0;
  for (int n : {101, 201}) {
    const GridSpec g = make_grid(0.0, 2.0, n);
    const ScalarField f = sample(g, [](double x, double) { return std::sin(3.0 * x); });
    const ScalarField d = fd_derivative(f, AxisId::X, 1, 4);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(d(i) - 3.0 * std::cos(3.0 * g.x.at(i))));
    err[idx++] = worst;
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 4.0, 0.4);
}

TEST(FiniteDifference, TimeAxisAndMatrixValues) {
  const GridSpec g = make_grid(0.0, 1.0, 11, 0.0, 1.0, 21);
  const SampledField f = sample(g, [](double x, double t) {
    Matrix m = zeros(2);
    m(0, 1) = cplx(x * t * t, t);
    return m;
  });
  const SampledField dt = fd_derivative(f, AxisId::T, 1);
  for (int it = 0; it < g.nt(); ++it)
    for (int ix = 0; ix < g.nx(); ++ix)
      EXPECT_NEAR(std::abs(dt(ix, it)(0, 1) - cplx(2.0 * g.x.at(ix) * g.t.at(it), 1.0)), 0.0, 1e-12);
}

TEST(FiniteDifference, GridTooSmall) {
  const std::vector<double> f(4, 1.0);
  try {
    fd_derivative(f, 0.1, 3);
    FAIL() << "expected GridTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridTooSmall);
  }
}

TEST(Quadrature, ConstantAndSech) {
  EXPECT_DOUBLE_EQ(integrate_quadrature(std::vector<double>(101, 1.0), 0.01), 1.0);
  const GridSpec g = make_grid(-40.0, 40.0, 4001);
  std::vector<double> f;
  for (int i = 0; i < g.nx(); ++i) f.push_back(1.0 / std::pow(std::cosh(2.0 * g.x.at(i)), 2));
  EXPECT_NEAR(integrate_quadrature(f, g.h()), 1.0, 1e-8);
  for (double v : integrate_cumulative(std::vector<double>(7, 0.0), 0.5)) EXPECT_EQ(v, 0.0);
}

TEST(Quadrature, CumulativeMatchesAntiderivative) {
  const GridSpec g = make_grid(0.0, 1.0, 201);
  std::vector<double> f;
  for (int i = 0; i < g.nx(); ++i) f.push_back(std::cos(g.x.at(i)));
  const auto c = integrate_cumulative(f, g.h());
  for (int i = 0; i < g.nx(); ++i) EXPECT_NEAR(c[static_cast<std::size_t>(i)], std::sin(g.x.at(i)), 1e-5);
  EXPECT_NEAR(c.back(), integrate_quadrature(f, g.h()), 1e-14);
}

TEST(Conservation, ConstantAndLinearSeries) {
  EXPECT_EQ(conservation_report({2.0, 2.0, 2.0}), 0.0);
  std::vector<double> lin;
  for (int i = 0; i <= 10; ++i) lin.push_back(5.0 + 0.01 * i);
  EXPECT_NEAR(conservation_report(lin), 0.1 / 5.05, 1e-14);
}

TEST(Interpolation, CubicMidpointExactOnCubics) {
  std::vector<double> f;
  for (int i = 0; i < 8; ++i) f.push_back(std::pow(i, 3) - 2.0 * i);
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double x = i + 0.5;
    EXPECT_NEAR(midpoint_cubic(f, i), x * x * x - 2.0 * x, 1e-12);
  }
}

TEST(Axis, RefinementAndNodes) {
  const Axis a{-1.0, 1.0, 5};
  EXPECT_EQ(a.refined().n, 9);
  EXPECT_DOUBLE_EQ(a.refined().step(), 0.25);
  EXPECT_EQ(a.node_of(0.0).value(), 2);
  EXPECT_FALSE(a.node_of(0.1).has_value());
}
