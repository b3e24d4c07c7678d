#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include <magstep/moments.hpp>

using namespace magstep;

namespace {

const GroundState1D& ground(double b1, double b2) {
  static std::map<std::pair<double, double>, GroundState1D> cache;
  auto key = std::make_pair(b1, b2);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, minimize_band(classify(b1, b2))).first;
  return it->second;
}

const std::vector<double> bs = {-1.0, -0.75, -0.5, -0.25, -0.1};

}  // namespace

TEST(Moments, FirstMomentVanishes) {
  for (double b : bs) {
    EXPECT_LT(std::abs(moment(ground(b, 1), 1).value), 1e-7) << "b = " << b;
    EXPECT_LT(std::abs(moment(ground(1, b), 1).value), 1e-7) << "b = " << b;
  }
}

TEST(Moments, ThirdMomentMatchesClosedForm) {
  for (double b : bs) {
    const GroundState1D& gs = ground(b, 1);
    double m3 = moment(gs, 3).value;
    EXPECT_NEAR(m3, m3_closed_form(gs), 1e-6) << "b = " << b;
    EXPECT_LT(m3_closed_form(gs), 0);
  }
  EXPECT_NEAR(moment(ground(-0.5, 1), 3).value, -0.0371733023, 1e-8);
}

TEST(Moments, ClosedFormRefusesTheMirroredField) {
  EXPECT_THROW(m3_closed_form(ground(1, -0.5)), WrongOrientation);
}

TEST(Moments, SignFlipRelation) {
  for (double b : bs)
    for (int n = 0; n <= 3; ++n)
      EXPECT_LT(sign_flip_check(ground(1, b), ground(b, 1), n), 1e-6) << "b = " << b << " n = " << n;
  EXPECT_THROW(sign_flip_check(ground(1, -0.5), ground(1, -0.25), 1), InvalidInput);
  EXPECT_THROW(moment(ground(1, -0.5), -1), InvalidInput);
}

TEST(Moments, ZeroMomentIsFiniteAndOrientationFree) {
  double a = moment(ground(-1, 1), 0).value, b = moment(ground(1, -1), 0).value;
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_NEAR(a, b, 1e-9);
}

TEST(Moments, QuadratureErrorShrinksUnderRefinement) {
  StepField f = classify(-0.5, 1);
  const double L = default_half_width(f);
  std::vector<double> err;
  for (int n : {1001, 2001, 4001}) {
    GroundState1D gs = minimize_band(f, make_grid(-L, L, n));
    err.push_back(moment(gs, 3).quadrature_error_estimate);
  }
  for (int k = 0; k + 1 < 3; ++k) EXPECT_GT(std::log2(err[k] / err[k + 1]), 2.0);
}

TEST(JDecomposition, IdentitiesHold) {
  for (double b : bs)
    for (const GroundState1D* gs : {&ground(1, b), &ground(b, 1)}) {
      JBreakdown j = j_breakdown(*gs);
      double m1 = moment(*gs, 1).value, m3 = moment(*gs, 3).value;
      EXPECT_DOUBLE_EQ(j.j_total, j.j1 + j.j2 + j.j3);
      EXPECT_LT(std::abs(j.j1 + j.j2), 1e-5) << "b = " << b;
      EXPECT_LT(std::abs(j.j_total - (-m3 + gs->xi_b * gs->xi_b * m1)), 1e-5) << "b = " << b;
    }
}

TEST(JDecomposition, SignDependsOnOrientation) {
  EXPECT_LT(j_breakdown(ground(1, -0.5)).j_total, 0);
  EXPECT_GT(j_breakdown(ground(-0.5, 1)).j_total, 0);
}

TEST(HalfLine, KnownValuesForHalfStep) {
  HalfLineIntegrals h = half_line_integrals(ground(1, -0.5));
  EXPECT_NEAR(h.first.minus, -0.16251897, 1e-7);
  EXPECT_NEAR(h.first.plus, 1.00358790, 1e-7);
}
