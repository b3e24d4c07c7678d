#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "errors.hpp"
#include "field.hpp"
#include "quadrature.hpp"

namespace magstep {

// Uniform grid with node i0 sitting exactly on t = 0; t(i) = (i - i0) h.
struct Grid1D {
  double h = 0;
  int n = 0;
  int i0 = 0;

  double t(int i) const { return (i - i0) * h; }
  double t_min() const { return t(0); }
  double t_max() const { return t(n - 1); }
};

inline Grid1D make_grid(double t_min, double t_max, int n) {
  if (!(t_min < 0 && t_max > 0)) throw InvalidInput("grid must satisfy t_min < 0 < t_max");
  if (n < 9) throw InvalidInput("grid needs at least 9 nodes");
  Grid1D g;
  g.n = n;
  g.h = (t_max - t_min) / (n - 1);
  double k = -t_min / g.h;
  g.i0 = static_cast<int>(std::lround(k));
  if (std::abs(k - g.i0) > 1e-9 || g.i0 < 4 || g.i0 > n - 5)
    throw InvalidInput("no grid node at t = 0 (need -t_min/h integral, at least 4 nodes per side)");
  return g;
}

// L = 12 / sqrt(min(1, |b1|, |b2|)); a zero intensity is skipped so the
// wall case still gets a finite box.
inline double default_half_width(const StepField& f) {
  double m = 1.0;
  for (double b : {f.b1, f.b2})
    if (b != 0) m = std::min(m, std::abs(b));
  return 12.0 / std::sqrt(m);
}

inline Grid1D default_grid(const StepField& f, int n = 4001) {
  if (n % 2 == 0) throw InvalidInput("grid-n must be odd so that t = 0 is a node");
  double L = default_half_width(f);
  return make_grid(-L, L, n);
}

// Finite-difference fiber operator on the interior nodes 1..n-2 (Dirichlet ends).
struct Tridiagonal {
  std::vector<double> diag;
  double off = 0;  // constant off-diagonal, -1/h^2
};

inline Tridiagonal assemble_fiber(const StepField& f, double xi, const Grid1D& g) {
  Tridiagonal T;
  T.off = -1.0 / (g.h * g.h);
  T.diag.resize(g.n - 2);
  for (int i = 1; i < g.n - 1; ++i) T.diag[i - 1] = 2.0 / (g.h * g.h) + potential(f, xi, g.t(i));
  return T;
}

// Number of eigenvalues below x (Sturm count from the LDL^T pivots).
inline int sturm_count(const Tridiagonal& T, double x) {
  int neg = 0;
  double q = 1;
  const double o2 = T.off * T.off;
  for (std::size_t i = 0; i < T.diag.size(); ++i) {
    q = T.diag[i] - x - (i ? o2 / q : 0.0);
    if (q == 0) q = -std::numeric_limits<double>::epsilon() * (std::abs(T.diag[i]) + std::abs(x));
    if (q < 0) ++neg;
  }
  return neg;
}

inline std::vector<double> tridiag_solve(const Tridiagonal& T, double shift, std::vector<double> b) {
  const std::size_t m = T.diag.size();
  std::vector<double> c(m);
  double den = T.diag[0] - shift;
  c[0] = T.off / den;
  b[0] /= den;
  for (std::size_t i = 1; i < m; ++i) {
    den = T.diag[i] - shift - T.off * c[i - 1];
    c[i] = T.off / den;
    b[i] = (b[i] - T.off * b[i - 1]) / den;
  }
  for (std::size_t i = m - 1; i-- > 0;) b[i] -= c[i] * b[i + 1];
  return b;
}

struct SolverOptions {
  double eig_tol = 1e-10;
  int max_iter = 200;
  double residual_tol = 1e-6;
  bool check_endpoint = true;  // the coarse bracketing scan turns this off
};

struct BandPoint {
  double xi = 0;
  double mu = 0;
  double residual = 0;
};

inline BandPoint mu(const StepField& f, double xi, const Grid1D& g, const SolverOptions& opt = {}) {
  Tridiagonal T = assemble_fiber(f, xi, g);
  double lo = 0, hi = 1;
  int it = 0;
  while (sturm_count(T, hi) < 1) {
    lo = hi;
    hi *= 2;
    if (++it > 60) throw NotConverged("could not bracket the lowest eigenvalue");
  }
  it = 0;
  while (hi - lo > opt.eig_tol) {
    double mid = 0.5 * (lo + hi);
    (sturm_count(T, mid) >= 1 ? hi : lo) = mid;
    if (++it > opt.max_iter) throw NotConverged("Sturm bisection exceeded the iteration cap");
  }
  BandPoint p{xi, 0.5 * (lo + hi), 0};

  double vend = std::min(potential(f, xi, g.t_min()), potential(f, xi, g.t_max()));
  if (opt.check_endpoint && vend < 10 * p.mu)
    throw InvalidInput("grid too narrow at xi = " + std::to_string(xi) + ": endpoint potential " +
                       std::to_string(vend) + " below 10x mu = " + std::to_string(p.mu));

  // two inverse-iteration sweeps give the eigenvector for the residual
  std::vector<double> v(T.diag.size(), 1.0);
  for (int k = 0; k < 2; ++k) {
    v = tridiag_solve(T, p.mu, v);
    double nv = 0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    for (double& x : v) x /= nv;
  }
  double r2 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double r = (T.diag[i] - p.mu) * v[i];
    if (i) r += T.off * v[i - 1];
    if (i + 1 < v.size()) r += T.off * v[i + 1];
    r2 += r * r;
  }
  p.residual = std::sqrt(r2);
  if (!(p.residual < opt.residual_tol)) throw NotConverged("fiber eigenvector residual too large");
  return p;
}

inline std::vector<BandPoint> band_curve(const StepField& f, const std::vector<double>& xis,
                                         const Grid1D& g, const SolverOptions& opt = {}) {
  std::vector<BandPoint> out;
  out.reserve(xis.size());
  for (double xi : xis) {
    if (!std::isfinite(xi)) throw InvalidInput("xi values must be finite");
    out.push_back(mu(f, xi, g, opt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shooting. Each side is integrated inward from its grid end, on the grid nodes
// with `sub` RK4 substeps per cell, carrying u, u', int u^2 and
// int (xi + sigma t) u^2. The start is the decaying WKB branch.

struct ShootOptions {
  double rk_step = 0.002;
  double bracket = 0.05;
  double tol = 1e-14;
};

namespace detail {

struct SideResult {
  double u = 0, du = 0, i0 = 0, i1 = 0;
  std::vector<double> samples;  // u at nodes, outer end first
};

inline SideResult integrate_side(const StepField& f, double xi, double mu, const Grid1D& g,
                                 bool left, int sub, bool record) {
  const double sg = left ? f.b1 : f.b2;
  const int cells = left ? g.i0 : g.n - 1 - g.i0;
  const double t_end = left ? g.t_min() : g.t_max();
  const double dt = (left ? g.h : -g.h) / sub;
  auto V = [&](double t) {
    double s = sg * t + xi;
    return s * s;
  };
  double kappa = std::sqrt(std::max(V(t_end) - mu, 1e-12));
  double y[4] = {1.0, left ? kappa : -kappa, 0, 0};
  SideResult r;
  if (record) {
    r.samples.reserve(cells + 1);
    r.samples.push_back(y[0]);
  }
  auto rhs = [&](double t, const double* s, double* d) {
    d[0] = s[1];
    d[1] = (V(t) - mu) * s[0];
    d[2] = s[0] * s[0];
    d[3] = (sg * t + xi) * s[0] * s[0];
  };
  double k1[4], k2[4], k3[4], k4[4], tmp[4];
  // wide grids overflow the growing branch; rescale and remember how often
  constexpr double big = 1e150;
  std::vector<int> level;
  int rescaled = 0;
  if (record) level.push_back(0);
  for (int c = 0; c < cells; ++c) {
    double t0 = t_end + (left ? c : -c) * g.h;
    for (int s = 0; s < sub; ++s) {
      double t = t0 + s * dt;
      rhs(t, y, k1);
      for (int q = 0; q < 4; ++q) tmp[q] = y[q] + 0.5 * dt * k1[q];
      rhs(t + 0.5 * dt, tmp, k2);
      for (int q = 0; q < 4; ++q) tmp[q] = y[q] + 0.5 * dt * k2[q];
      rhs(t + 0.5 * dt, tmp, k3);
      for (int q = 0; q < 4; ++q) tmp[q] = y[q] + dt * k3[q];
      rhs(t + dt, tmp, k4);
      for (int q = 0; q < 4; ++q) y[q] += dt / 6.0 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q]);
    }
    if (std::abs(y[0]) > big || std::abs(y[1]) > big) {
      y[0] /= big, y[1] /= big, y[2] /= big * big, y[3] /= big * big;
      ++rescaled;
    }
    if (record) {
      r.samples.push_back(y[0]);
      level.push_back(rescaled);
    }
  }
  for (std::size_t k = 0; k < r.samples.size(); ++k)
    for (int q = level[k]; q < rescaled; ++q) r.samples[k] /= big;
  r.u = y[0];
  r.du = y[1];
  // the right side runs with negative dt, so its integrals come out negated
  r.i0 = left ? y[2] : -y[2];
  r.i1 = left ? y[3] : -y[3];
  return r;
}

inline int substeps(const Grid1D& g, const ShootOptions& o) {
  return std::max(1, static_cast<int>(std::ceil(g.h / o.rk_step - 1e-9)));
}

// Normalized Wronskian at t = 0: sine of the Pruefer-angle difference.
inline double matching(const SideResult& L, const SideResult& R) {
  double w = L.du * R.u - R.du * L.u;
  return w / (std::hypot(L.u, L.du) * std::hypot(R.u, R.du));
}

}  // namespace detail

struct ShootResult {
  double mu = 0;
  double log_derivative_mismatch = 0;
  double dmu_dxi = 0;  // Feynman-Hellmann derivative at the converged mu
};

inline ShootResult weber_solve(const StepField& f, double xi, const Grid1D& g, double mu_guess,
                               const ShootOptions& o = {}) {
  if (!(f.trapping() || f.kind == FieldCase::Uniform))
    throw InvalidInput("shooting needs a trapping, symmetric-trapping or uniform field");
  const int sub = detail::substeps(g, o);
  auto F = [&](double m) {
    auto L = detail::integrate_side(f, xi, m, g, true, sub, false);
    auto R = detail::integrate_side(f, xi, m, g, false, sub, false);
    return detail::matching(L, R);
  };
  double a = mu_guess - o.bracket, b = mu_guess + o.bracket;
  double fa = F(a), fb = F(b);
  if (fa * fb > 0) throw NoRoot("matching function keeps its sign on [mu-0.05, mu+0.05]");
  std::uintmax_t iters = 200;
  auto tol = [&](double x, double y) { return std::abs(x - y) <= o.tol * std::max(1.0, std::abs(x)); };
  auto [r0, r1] = boost::math::tools::toms748_solve(F, a, b, fa, fb, tol, iters);
  if (iters >= 200) throw NotConverged("shooting root did not converge");
  ShootResult res;
  res.mu = 0.5 * (r0 + r1);
  auto L = detail::integrate_side(f, xi, res.mu, g, true, sub, false);
  auto R = detail::integrate_side(f, xi, res.mu, g, false, sub, false);
  res.log_derivative_mismatch = L.du / L.u - R.du / R.u;
  double c = L.u / R.u;
  res.dmu_dxi = 2 * (L.i1 + c * c * R.i1) / (L.i0 + c * c * R.i0);
  return res;
}

inline ShootResult weber_solve(const StepField& f, double xi, const ShootOptions& o = {}) {
  Grid1D g = default_grid(f);
  return weber_solve(f, xi, g, mu(f, xi, g).mu, o);
}

struct GroundState1D {
  StepField field;
  double xi_b = 0;
  double beta_b = 0;
  Grid1D grid;
  std::vector<double> phi;
  std::vector<double> dphi;
  double phi0 = 0;
  double dphi0 = 0;
  double dphi0_left = 0, dphi0_right = 0;
  double log_derivative_mismatch = 0;

  double t(int i) const { return grid.t(i); }
};

namespace detail {

// 5-point derivative at node i using nodes from [lo, hi] only.
inline double stencil_derivative(const std::vector<double>& u, const Grid1D& g, int i, int lo,
                                 int hi) {
  int a = std::clamp(i - 2, lo, hi - 4);
  std::vector<double> x(5);
  for (int k = 0; k < 5; ++k) x[k] = (a + k - i) * g.h;
  auto w = fd_weights(0.0, x);
  double d = 0;
  for (int k = 0; k < 5; ++k) d += w[k] * u[a + k];
  return d;
}

}  // namespace detail

// Samples the shooting solution at mu on the grid, glued and normalized.
inline GroundState1D ground_state_at(const StepField& f, double xi, const Grid1D& g, double mu_guess,
                                     const ShootOptions& o = {}) {
  ShootResult s = weber_solve(f, xi, g, mu_guess, o);
  const int sub = detail::substeps(g, o);
  auto L = detail::integrate_side(f, xi, s.mu, g, true, sub, true);
  auto R = detail::integrate_side(f, xi, s.mu, g, false, sub, true);
  double c = L.u / R.u;
  double norm = std::sqrt(L.i0 + c * c * R.i0);
  double sign = L.u > 0 ? 1.0 : -1.0;

  GroundState1D gs;
  gs.field = f;
  gs.xi_b = xi;
  gs.beta_b = s.mu;
  gs.grid = g;
  gs.log_derivative_mismatch = s.log_derivative_mismatch;
  gs.phi.resize(g.n);
  for (int i = 0; i <= g.i0; ++i) gs.phi[i] = sign * L.samples[i] / norm;
  for (int i = g.i0; i < g.n; ++i) gs.phi[i] = sign * c * R.samples[g.n - 1 - i] / norm;

  gs.dphi.resize(g.n);
  for (int i = 0; i < g.i0; ++i) gs.dphi[i] = detail::stencil_derivative(gs.phi, g, i, 0, g.i0);
  for (int i = g.i0 + 1; i < g.n; ++i)
    gs.dphi[i] = detail::stencil_derivative(gs.phi, g, i, g.i0, g.n - 1);
  gs.dphi0_left = detail::stencil_derivative(gs.phi, g, g.i0, 0, g.i0);
  gs.dphi0_right = detail::stencil_derivative(gs.phi, g, g.i0, g.i0, g.n - 1);
  gs.phi0 = gs.phi[g.i0];
  gs.dphi0 = 0.5 * (gs.dphi0_left + gs.dphi0_right);
  gs.dphi[g.i0] = gs.dphi0;

  double pmax = 0;
  for (double p : gs.phi) pmax = std::max(pmax, std::abs(p));
  if (std::abs(gs.dphi0_left - gs.dphi0_right) > 1e-4 * pmax)
    throw NotConverged("one-sided derivatives at t = 0 disagree");
  return gs;
}

inline double l2_norm2(const GroundState1D& gs) {
  auto f = [&](int i) { return gs.phi[i] * gs.phi[i]; };
  return simpson(f, 0, gs.grid.i0, gs.grid.h) + simpson(f, gs.grid.i0, gs.grid.n - 1, gs.grid.h);
}

// Least-squares slope of log|phi| against |t| on the outer quarter of each side;
// returns the smaller of the two decay rates.
inline double decay_rate(const GroundState1D& gs) {
  const Grid1D& g = gs.grid;
  auto fit = [&](int from, int to) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = from; i <= to; ++i) {
      if (std::abs(gs.phi[i]) < 1e-280) continue;
      double x = std::abs(g.t(i)), y = std::log(std::abs(gs.phi[i]));
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      ++m;
    }
    return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  int qL = g.i0 / 4, qR = (g.n - 1 - g.i0) / 4;
  return std::min(fit(0, qL), fit(g.n - 1 - qR, g.n - 1));
}

struct MinimizeOptions {
  double scan_lo = -3, scan_hi = 3;
  int scan_points = 121;
  double xi_tol = 1e-8;
  ShootOptions shoot;
};

inline GroundState1D minimize_band(const StepField& f, const Grid1D& g,
                                   const MinimizeOptions& o = {}) {
  if (!(f.trapping() || f.kind == FieldCase::NonTrapping))
    throw InvalidInput(std::string("minimize_band needs a trapping field, got ") + to_string(f.kind));
  std::vector<double> xs(o.scan_points), ms(o.scan_points);
  SolverOptions scan;
  scan.check_endpoint = false;
  for (int k = 0; k < o.scan_points; ++k) {
    xs[k] = o.scan_lo + (o.scan_hi - o.scan_lo) * k / (o.scan_points - 1);
    ms[k] = mu(f, xs[k], g, scan).mu;
  }
  int k = static_cast<int>(std::min_element(ms.begin(), ms.end()) - ms.begin());
  if (k == 0 || k == o.scan_points - 1)
    throw NoInteriorMinimum("coarse scan minimum sits at the bracket end xi = " + std::to_string(xs[k]));
  if (!f.trapping()) throw NoInteriorMinimum("non-trapping field has no attained minimum");

  auto shoot_mu = [&](double xi) { return weber_solve(f, xi, g, mu(f, xi, g).mu, o.shoot).mu; };
  std::uintmax_t it = 100;
  auto [xb, mb] = boost::math::tools::brent_find_minima(shoot_mu, xs[k - 1], xs[k + 1], 40, it);
  (void)mb;

  // mu is flat at the minimum, so refine with a root of the Feynman-Hellmann derivative
  auto dmu = [&](double xi) { return weber_solve(f, xi, g, mu(f, xi, g).mu, o.shoot).dmu_dxi; };
  double w = 1e-4;
  double a = xb - w, b = xb + w, fa = dmu(a), fb = dmu(b);
  for (int e = 0; e < 8 && fa * fb > 0; ++e) {
    w *= 4;
    a = xb - w, b = xb + w, fa = dmu(a), fb = dmu(b);
  }
  double xi_b = xb;
  if (fa * fb <= 0) {
    std::uintmax_t iters = 100;
    auto tol = [&](double x, double y) { return std::abs(x - y) <= 0.01 * o.xi_tol; };
    auto [r0, r1] = boost::math::tools::toms748_solve(dmu, a, b, fa, fb, tol, iters);
    xi_b = 0.5 * (r0 + r1);
  }
  return ground_state_at(f, xi_b, g, mu(f, xi_b, g).mu, o.shoot);
}

inline GroundState1D minimize_band(const StepField& f, const MinimizeOptions& o = {}) {
  return minimize_band(f, default_grid(f), o);
}

// ---------------------------------------------------------------------------
// de Gennes reference: Chebyshev collocation of -u'' + (t + xi)^2 u on [0, T]
// with u'(0) = 0 and u(T) = 0, minimized over xi. Independent of the FD and
// shooting paths above.

inline double neumann_ground(double xi, int N = 60, double T = 12.0) {
  Eigen::VectorXd x(N + 1);
  for (int k = 0; k <= N; ++k) x[k] = std::cos(M_PI * k / N);
  Eigen::MatrixXd D(N + 1, N + 1);
  auto cw = [&](int k) { return (k == 0 || k == N ? 2.0 : 1.0) * (k % 2 ? -1.0 : 1.0); };
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j)
      D(i, j) = i == j ? 0.0 : cw(i) / cw(j) / (x[i] - x[j]);
  for (int i = 0; i <= N; ++i) D(i, i) = -D.row(i).sum();
  // t = T (1 - x) / 2, so node 0 is t = 0 and node N is t = T
  Eigen::MatrixXd Dt = (-2.0 / T) * D;
  Eigen::MatrixXd D2 = Dt * Dt;
  // u_0 = -sum_{j>=1} Dt(0,j) u_j / Dt(0,0) enforces the Neumann row; u_N = 0
  const int m = N - 1;
  Eigen::MatrixXd A(m, m);
  for (int i = 1; i <= m; ++i) {
    double t = T * (1 - x[i]) / 2;
    for (int j = 1; j <= m; ++j) {
      double v = -D2(i, j) + D2(i, 0) * Dt(0, j) / Dt(0, 0);
      A(i - 1, j - 1) = v;
    }
    A(i - 1, i - 1) += (t + xi) * (t + xi);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    auto ev = es.eigenvalues()[k];
    if (std::abs(ev.imag()) < 1e-8 && ev.real() < best) best = ev.real();
  }
  return best;
}

struct DeGennes {
  double theta0 = 0;
  double xi0 = 0;
};

inline DeGennes degennes_oracle(int N = 60) {
  std::uintmax_t it = 200;
  auto [xi, th] = boost::math::tools::brent_find_minima(
      [&](double s) { return neumann_ground(s, N); }, -2.0, 0.0, 50, it);
  return {th, xi};
}

}  // namespace magstep
