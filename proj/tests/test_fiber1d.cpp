#include <cmath>
#include <random>
#include <map>

#include <gtest/gtest.h>

#include <magstep/fiber1d.hpp>

using namespace magstep;

namespace {

const DeGennes& degennes() {
  static DeGennes d = degennes_oracle();
  return d;
}

const GroundState1D& ground(double b1, double b2) {
  static std::map<std::pair<double, double>, GroundState1D> cache;
  auto key = std::make_pair(b1, b2);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, minimize_band(classify(b1, b2))).first;
  return it->second;
}

}  // namespace

TEST(Grid, NodeAtOriginAndValidation) {
  Grid1D g = make_grid(-2, 2, 41);
  EXPECT_EQ(g.i0, 20);
  EXPECT_DOUBLE_EQ(g.t(g.i0), 0);
  EXPECT_THROW(make_grid(0, 2, 41), InvalidInput);
  EXPECT_THROW(make_grid(-1, 2, 41), InvalidInput);  // 0 falls between nodes
  EXPECT_THROW(make_grid(-1, 1, 5), InvalidInput);
  EXPECT_THROW(default_grid(classify(1, -0.5), 4000), InvalidInput);
}

TEST(Fiber, SturmCountMatchesEigenvalueBracket) {
  StepField f = classify(1, 1);
  Grid1D g = default_grid(f, 2001);
  Tridiagonal T = assemble_fiber(f, 0.0, g);
  // harmonic oscillator levels 1, 3, 5
  EXPECT_EQ(sturm_count(T, 0.9), 0);
  EXPECT_EQ(sturm_count(T, 1.1), 1);
  EXPECT_EQ(sturm_count(T, 4.0), 2);
  EXPECT_EQ(sturm_count(T, 6.0), 3);
}

TEST(Fiber, UniformFieldGivesTheLandauLevel) {
  StepField f = classify(1, 1);
  EXPECT_NEAR(weber_solve(f, 0.0).mu, 1.0, 1e-10);
  Grid1D g = default_grid(f);
  // translation invariance: mu(xi) = 1 for any xi the box can hold
  for (double xi : {-1.0, 0.0, 1.0}) {
    BandPoint p = mu(f, xi, g);
    EXPECT_NEAR(p.mu, 1.0, 1e-5) << "xi = " << xi;
    EXPECT_LT(p.residual, 1e-6);
  }
}

TEST(Fiber, ShootingFailsCleanlyWithoutAnEigenvalueInTheBracket) {
  StepField f = classify(1, 1);
  EXPECT_THROW(weber_solve(f, 0.0, default_grid(f), 2.0), NoRoot);
  EXPECT_THROW(weber_solve(classify(1, 0.5), 0.0, default_grid(classify(1, 0.5)), 0.6), InvalidInput);
}

TEST(DeGennes, OracleValueAndGridConvergence) {
  const DeGennes& d = degennes();
  EXPECT_NEAR(d.theta0, 0.590106125, 1e-8);
  EXPECT_NEAR(d.xi0, -std::sqrt(d.theta0), 1e-6);
  EXPECT_NEAR(degennes_oracle(120).theta0, d.theta0, 1e-8);
  EXPECT_GT(neumann_ground(0.0), d.theta0);
}

TEST(DeGennes, SymmetricTrappingRecoversTheta0) {
  const double th = degennes().theta0;
  const GroundState1D& a = ground(1, -1);
  const GroundState1D& b = ground(-1, 1);
  EXPECT_NEAR(a.beta_b, th, 1e-8);
  EXPECT_NEAR(b.beta_b, th, 1e-8);
  // the orientation decides the sign of xi_b
  EXPECT_NEAR(a.xi_b, std::sqrt(th), 1e-6);
  EXPECT_NEAR(b.xi_b, -std::sqrt(th), 1e-6);
  EXPECT_NEAR(weber_solve(classify(1, -1), std::sqrt(th)).mu, th, 1e-8);
}

TEST(GroundState, BetaLiesBetweenTheBounds) {
  const double th = degennes().theta0;
  for (double b : {-0.75, -0.5, -0.25}) {
    double beta = ground(1, b).beta_b;
    EXPECT_GT(beta, std::abs(b) * th) << "b = " << b;
    EXPECT_LT(beta, std::abs(b)) << "b = " << b;
  }
}

TEST(GroundState, NormalizedWithPositiveValueAtZero) {
  const GroundState1D& gs = ground(1, -0.5);
  EXPECT_NEAR(l2_norm2(gs), 1.0, 1e-10);
  EXPECT_GT(gs.phi0, 0);
  EXPECT_LT(std::abs(gs.dphi0_left - gs.dphi0_right), 1e-4);
  EXPECT_GT(decay_rate(gs), 0.5 * std::sqrt(0.5));
}

TEST(GroundState, KnownMinimumForHalfStep) {
  const GroundState1D& gs = ground(1, -0.5);
  EXPECT_NEAR(gs.xi_b, 0.6643129231, 1e-7);
  EXPECT_NEAR(gs.beta_b, 0.391237469113, 1e-9);
}

TEST(GroundState, ReflectionDuality) {
  const GroundState1D& a = ground(1, -0.5);
  const GroundState1D& b = ground(-0.5, 1);
  EXPECT_NEAR(a.beta_b, b.beta_b, 1e-10);
  EXPECT_NEAR(a.xi_b, -b.xi_b, 1e-7);
  ASSERT_EQ(a.grid.n, b.grid.n);
  double worst = 0;
  for (int i = 0; i < a.grid.n; ++i) worst = std::max(worst, std::abs(a.phi[i] - b.phi[a.grid.n - 1 - i]));
  EXPECT_LT(worst, 1e-6);
}

TEST(Band, StrictlyConvexAtTheMinimum) {
  const GroundState1D& gs = ground(1, -0.5);
  Grid1D g = default_grid(gs.field);
  const double w = 0.05;
  double m0 = weber_solve(gs.field, gs.xi_b, g, gs.beta_b).mu;
  double mp = weber_solve(gs.field, gs.xi_b + w, g, gs.beta_b).mu;
  double mm = weber_solve(gs.field, gs.xi_b - w, g, gs.beta_b).mu;
  EXPECT_GT(mp - 2 * m0 + mm, 0);
  EXPECT_GT(mp, m0);
  EXPECT_GT(mm, m0);
}

TEST(Band, FiniteDifferencesConvergeToShootingAtSecondOrder) {
  const GroundState1D& gs = ground(1, -0.5);
  const double L = default_half_width(gs.field);
  double exact = weber_solve(gs.field, gs.xi_b, make_grid(-L, L, 8001), gs.beta_b).mu;
  std::vector<double> err;
  for (int n : {1001, 2001, 4001}) err.push_back(std::abs(mu(gs.field, gs.xi_b, make_grid(-L, L, n)).mu - exact));
  for (int k = 0; k + 1 < 3; ++k) {
    double order = std::log2(err[k] / err[k + 1]);
    EXPECT_GT(order, 1.8);
    EXPECT_LT(order, 2.2);
  }
}

TEST(Band, ReflectionPropertyOnRandomXi) {
  StepField f = classify(1, -0.5), r = f.reflected();
  Grid1D g = default_grid(f, 2001);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    double xi = -2.5 + 5.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    EXPECT_NEAR(mu(f, xi, g).mu, mu(r, -xi, g).mu, 1e-9) << "xi = " << xi;
    EXPECT_GE(mu(f, xi, g).mu, 0.5 * degennes().theta0 - 1e-6);
  }
}

TEST(Minimize, RejectsFieldsWithoutAMinimum) {
  EXPECT_THROW(minimize_band(classify(1, 1)), InvalidInput);
  EXPECT_THROW(minimize_band(classify(0, 1)), InvalidInput);
  EXPECT_THROW(minimize_band(classify(1, 0.5)), NoInteriorMinimum);
}
