#include <cmath>

#include <gtest/gtest.h>

#include <magstep/quadrature.hpp>

using namespace magstep;

TEST(Quadrature, GaussLegendreIsExactForDegree2nMinus1) {
  Rule r = gauss_legendre<6>();
  ASSERT_EQ(r.x.size(), 6u);
  for (int p = 0; p <= 11; ++p) {
    double s = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], p);
    double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
    EXPECT_NEAR(s, exact, 1e-14) << "degree " << p;
  }
}

TEST(Quadrature, OddRuleKeepsTheMiddleNodeOnce) {
  Rule r = gauss_legendre<5>();
  ASSERT_EQ(r.x.size(), 5u);
  double w = 0;
  for (double v : r.w) w += v;
  EXPECT_NEAR(w, 2, 1e-14);
}

TEST(Quadrature, PanelRuleIntegratesOnSubintervals) {
  Rule r = panel_rule(gauss_legendre<4>(), 0, M_PI, 8);
  double s = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::sin(r.x[i]);
  EXPECT_NEAR(s, 2, 1e-11);
}

TEST(Quadrature, SimpsonConvergesAtFourthOrder) {
  auto err = [](int n) {
    double h = 1.0 / n;
    return std::abs(simpson([&](int i) { return std::exp(i * h); }, 0, n, h) - (std::exp(1.0) - 1));
  };
  double order = std::log2(err(16) / err(32));
  EXPECT_NEAR(order, 4, 0.1);
  EXPECT_THROW(simpson([](int) { return 1.0; }, 0, 3, 0.1), InvalidInput);
}

TEST(Quadrature, FornbergWeightsDifferentiatePolynomials) {
  std::vector<double> x = {-0.2, -0.1, 0, 0.1, 0.2};
  auto w = fd_weights(0.0, x);
  // exact up to degree 4
  for (int p = 0; p <= 4; ++p) {
    double d = 0;
    for (int k = 0; k < 5; ++k) d += w[k] * std::pow(x[k] + 0.3, p);
    double exact = p == 0 ? 0 : p * std::pow(0.3, p - 1);
    EXPECT_NEAR(d, exact, 1e-9) << "degree " << p;
  }
  // one-sided stencil
  std::vector<double> y = {0, 0.1, 0.2, 0.3, 0.4};
  auto v = fd_weights(0.0, y);
  double d = 0;
  for (int k = 0; k < 5; ++k) d += v[k] * std::sin(y[k]);
  EXPECT_NEAR(d, 1, 1e-4);
}
