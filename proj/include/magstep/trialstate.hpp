#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "moments.hpp"
#include "quadrature.hpp"

namespace magstep {

using Vec2 = Eigen::Vector2d;

struct WedgeGeometry {
  double delta = 0;
  double gamma = 0;  // sqrt(delta)
  double ell = 0;    // 1/sqrt(delta)
  Eigen::Matrix2d S;

  Vec2 reflect(const Vec2& x) const { return S * x; }
};

inline WedgeGeometry make_geometry(double delta) {
  if (!(delta > 0 && delta < M_PI / 2)) throw InvalidInput("delta must lie in (0, pi/2)");
  WedgeGeometry g;
  g.delta = delta;
  g.gamma = std::sqrt(delta);
  g.ell = 1.0 / std::sqrt(delta);
  g.S << -std::cos(delta), -std::sin(delta), -std::sin(delta), std::cos(delta);
  return g;
}

enum class Region { T1plus, T2plus, T1minus, T2minus, V1plus, V2plus, V1minus, V2minus, Outside };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::T1plus: return "T1plus";
    case Region::T2plus: return "T2plus";
    case Region::T1minus: return "T1minus";
    case Region::T2minus: return "T2minus";
    case Region::V1plus: return "V1plus";
    case Region::V2plus: return "V2plus";
    case Region::V1minus: return "V1minus";
    case Region::V2minus: return "V2minus";
    case Region::Outside: return "Outside";
  }
  return "?";
}

inline constexpr std::array<Region, 8> all_regions = {Region::T1plus, Region::T2plus, Region::T1minus,
                                                      Region::T2minus, Region::V1plus, Region::V2plus,
                                                      Region::V1minus, Region::V2minus};

inline bool is_plus(Region r) {
  return r == Region::T1plus || r == Region::T2plus || r == Region::V1plus || r == Region::V2plus;
}
inline bool is_v(Region r) {
  return r == Region::V1plus || r == Region::V2plus || r == Region::V1minus || r == Region::V2minus;
}
// 1 for the lower field region (intensity b1), 2 for the upper one
inline int field_index(Region r) {
  return (r == Region::T1plus || r == Region::T1minus || r == Region::V1plus || r == Region::V1minus) ? 1 : 2;
}

// Angular breakpoints, counterclockwise from the positive x1 axis.
struct Sectors {
  double a1, a2, a3, a4, a5, a6, a7;
  explicit Sectors(const WedgeGeometry& g) {
    double d = g.delta, c = g.gamma;
    a1 = (M_PI + d - c) / 2;
    a2 = (M_PI + d) / 2;
    a3 = (M_PI + d + c) / 2;
    a4 = M_PI + d;
    a5 = (3 * M_PI + d - c) / 2;
    a6 = (3 * M_PI + d) / 2;
    a7 = (3 * M_PI + d + c) / 2;
  }
};

inline double polar_angle(const Vec2& x) {
  double th = std::atan2(x[1], x[0]);
  return th < 0 ? th + 2 * M_PI : th;
}

// (S x)_2, the transverse coordinate on the reflected side
inline double s_coord(const WedgeGeometry& g, const Vec2& x) {
  return -std::sin(g.delta) * x[0] + std::cos(g.delta) * x[1];
}

// Boundary points go to the plus region first, then T before V.
inline Region region_of(const Vec2& x, const WedgeGeometry& g) {
  Sectors s(g);
  double th = polar_angle(x);
  double t = x[1], u = s_coord(g, x);
  Region r;
  if (th <= s.a1) r = x[1] < 0 ? Region::T1plus : Region::T2plus;
  else if (th <= s.a2) r = Region::V2plus;
  else if (th < s.a3) r = Region::V2minus;
  else if (th <= s.a4) r = Region::T2minus;
  else if (th <= s.a5) r = Region::T1minus;
  else if (th < s.a6) r = Region::V1minus;
  else if (th < s.a7) r = Region::V1plus;
  else r = Region::T1plus;
  double tau = is_plus(r) ? t : u;
  return std::abs(tau) < g.ell ? r : Region::Outside;
}

struct PhaseSpec {
  double c1 = 0, d1 = 0, c2 = 0, d2 = 0;
  double gamma = 0, delta = 0;
  // h_j runs from +1 on the T-minus edge of V_j to -1 on its T-plus edge
  double h1(double th) const { return -(2 / gamma) * (th - (3 * M_PI + delta) / 2); }
  double h2(double th) const { return (2 / gamma) * (th - (M_PI + delta) / 2); }
  double dh1() const { return -2 / gamma; }
  double dh2() const { return 2 / gamma; }
};

inline PhaseSpec make_phase(const WedgeGeometry& g, const GroundState1D& gs) {
  PhaseSpec p;
  p.gamma = g.gamma;
  p.delta = g.delta;
  p.c1 = gs.xi_b * std::sin((g.gamma + g.delta) / 2);
  p.c2 = gs.xi_b * std::sin((g.gamma - g.delta) / 2);
  p.d1 = gs.field.b1 / 4 * std::sin(g.delta) * std::cos(g.gamma);
  p.d2 = gs.field.b2 / 4 * std::sin(g.delta) * std::cos(g.gamma);
  return p;
}

// Smooth bump: 1 on [-1/2, 1/2], 0 outside (-1, 1), built from exp(-1/x).
struct Bump {
  static double f(double x) { return x > 0 ? std::exp(-1 / x) : 0.0; }
  static double df(double x) { return x > 0 ? std::exp(-1 / x) / (x * x) : 0.0; }
  static std::pair<double, double> eval(double s) {
    double a = std::abs(s);
    if (a <= 0.5) return {1, 0};
    if (a >= 1) return {0, 0};
    double u = 2 * (a - 0.5);
    double p = f(1 - u), q = f(u), den = p + q;
    double dg = (-df(1 - u) * q - p * df(u)) / (den * den);
    return {p / den, dg * 2 * (s < 0 ? -1 : 1)};
  }
};

struct TrialState {
  WedgeGeometry geom;
  GroundState1D gs;
  PhaseSpec phase;
  double eps = 1;
  double m3 = 0;
  double kappa = 0;  // |M3| delta, decay rate of eta_+^2

  // eta_+ and its derivative
  std::pair<double, double> eta(double x) const {
    if (x <= eps) return {1, 0};
    double e = std::exp(-0.5 * kappa * (x - eps));
    return {e, -0.5 * kappa * e};
  }
  double eta_norm2() const { return eps + 1 / kappa; }
  double deta_norm2() const { return kappa / 4; }

  // Cubic Hermite interpolant of phi on the stored grid, and its derivative.
  std::pair<double, double> phi(double t) const {
    const Grid1D& g = gs.grid;
    double k = t / g.h + g.i0;
    if (k <= 0 || k >= g.n - 1) return {0, 0};
    int i = std::min(static_cast<int>(k), g.n - 2);
    double u = k - i, h = g.h;
    double p0 = gs.phi[i], p1 = gs.phi[i + 1], m0 = gs.dphi[i] * h, m1 = gs.dphi[i + 1] * h;
    double u2 = u * u, u3 = u2 * u;
    double v = (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
    double dv = (6 * u2 - 6 * u) * p0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * p1 + (3 * u2 - 2 * u) * m1;
    return {v, dv / h};
  }
  // phi_l(t) = chi(t / l) phi(t)
  std::pair<double, double> phi_l(double t) const {
    auto [c, dc] = Bump::eval(t / geom.ell);
    if (c == 0) return {0, 0};
    auto [p, dp] = phi(t);
    return {c * p, dc / geom.ell * p + c * dp};
  }
};

inline TrialState make_trial(const GroundState1D& gs, double delta, double eps = 1.0) {
  if (!gs.field.trapping()) throw InvalidInput("trial state needs a trapping ground state");
  TrialState ts;
  ts.geom = make_geometry(delta);
  ts.gs = gs;
  ts.phase = make_phase(ts.geom, gs);
  ts.eps = eps;
  ts.m3 = moment(gs, 3).value;
  ts.kappa = std::abs(ts.m3) * delta;
  if (!(ts.kappa > 0)) throw InvalidInput("M3 vanishes for this field; eta would not decay");
  // eta is taken as 1 on the V sectors, which needs the plateau to cover them
  double reach = ts.geom.ell * std::tan((ts.geom.gamma + delta) / 2);
  if (!(eps > reach))
    throw InvalidInput("plateau eps must exceed l tan((gamma+delta)/2) = " + std::to_string(reach));
  return ts;
}

// Pointwise data of Psi^tr. `value` is in the gauge of A_{b,delta}; `density`
// is |(grad - i A_{b,delta}) value|^2, computed from the branch formulas in the
// sigma*(-x2, 0) gauge where it takes the same value.
struct TrialSample {
  Region region = Region::Outside;
  std::complex<double> value;
  double density = 0;
  double norm2 = 0;
};

inline double gauge_zeta(const TrialState& ts, const Vec2& x) {
  const auto& f = ts.gs.field;
  bool omega1 = x[0] <= 0 ? x[1] < x[0] * std::tan(ts.geom.delta) : x[1] < 0;
  if (!omega1 || x[0] >= 0) return 0;
  return 0.5 * (f.b1 - f.b2) * x[0] * x[0] * std::tan(ts.geom.delta);
}

inline TrialSample eval_trial_full(const TrialState& ts, const Vec2& x, Region r) {
  TrialSample out;
  out.region = r;
  if (r == Region::Outside) return out;
  const auto& g = ts.geom;
  const double sd = std::sin(g.delta), cd = std::cos(g.delta);
  const double xi = ts.gs.xi_b;
  const int j = field_index(r);
  const double sigma = j == 1 ? ts.gs.field.b1 : ts.gs.field.b2;
  const bool plus = is_plus(r);

  // amplitude A = eta(arg) phi_l(tau)
  double tau = plus ? x[1] : s_coord(g, x);
  Vec2 dtau = plus ? Vec2(0, 1) : Vec2(-sd, cd);
  auto [p, dp] = ts.phi_l(tau);
  double e = 1, de = 0;
  Vec2 darg(0, 0);
  if (!is_v(r)) {
    double arg = plus ? x[0] : -cd * x[0] - sd * x[1];
    darg = plus ? Vec2(1, 0) : Vec2(-cd, -sd);
    std::tie(e, de) = ts.eta(arg);
  }
  double A = e * p;
  Vec2 dA = de * p * darg + e * dp * dtau;

  // phase P and its gradient
  double P;
  Vec2 dP;
  if (r == Region::T1plus || r == Region::T2plus) {
    P = xi * x[0];
    dP = Vec2(xi, 0);
  } else if (r == Region::T1minus || r == Region::T2minus) {
    const double s2 = std::sin(2 * g.delta), ss = sd * sd;
    double vphi = s2 / 4 * (x[0] * x[0] - x[1] * x[1]) + x[0] * x[1] * ss;
    Vec2 dvphi(s2 / 2 * x[0] + x[1] * ss, -s2 / 2 * x[1] + x[0] * ss);
    P = xi * (cd * x[0] + sd * x[1]) - sigma * vphi;
    dP = xi * Vec2(cd, sd) - sigma * dvphi;
  } else {
    const auto& ph = ts.phase;
    double rr = x.norm(), th = polar_angle(x);
    double c = j == 1 ? ph.c1 : ph.c2, d = j == 1 ? ph.d1 : ph.d2;
    double h = j == 1 ? ph.h1(th) : ph.h2(th), dh = j == 1 ? ph.dh1() : ph.dh2();
    P = d * rr * rr - h * (c * rr - d * rr * rr);
    double ar = 2 * d * rr - h * (c - 2 * d * rr);
    double at_over_r = -dh * (c - d * rr);
    double ct = std::cos(th), st = std::sin(th);
    dP = ar * Vec2(ct, st) + at_over_r * Vec2(-st, ct);
  }
  double k1 = dP[0] + sigma * x[1], k2 = dP[1];
  out.density = dA.squaredNorm() + A * A * (k1 * k1 + k2 * k2);
  out.norm2 = A * A;
  out.value = A * std::polar(1.0, P + gauge_zeta(ts, x));
  return out;
}

inline TrialSample eval_trial_full(const TrialState& ts, const Vec2& x) {
  return eval_trial_full(ts, x, region_of(x, ts.geom));
}

inline std::complex<double> eval_trial(const TrialState& ts, const Vec2& x) {
  return eval_trial_full(ts, x).value;
}

// Largest jump of Psi^tr across the region edges, probed at n random points on
// the edge rays (the barrier ray theta = 0 included) within radius l.
inline double max_interface_jump(const TrialState& ts, int n, std::uint64_t seed) {
  Sectors s(ts.geom);
  const std::array<double, 8> edges = {0.0, s.a1, s.a2, s.a3, s.a4, s.a5, s.a6, s.a7};
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  double worst = 0;
  for (int k = 0; k < n; ++k) {
    double th = edges[rng() % edges.size()];
    double rr = (0.02 + 0.96 * unit()) * ts.geom.ell;
    Vec2 e(std::cos(th), std::sin(th)), nrm(-std::sin(th), std::cos(th));
    Vec2 x = rr * e;
    worst = std::max(worst, std::abs(eval_trial(ts, x + 1e-10 * nrm) - eval_trial(ts, x - 1e-10 * nrm)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Quadrature. T regions use the coordinates y of T-plus (x = S y on T-minus);
// y1 beyond the plateau goes through u = 1 - exp(-kappa (y1 - eps)), which makes
// the eta^2 factor uniform in u. V sectors use polar angle and the transverse
// coordinate. Transverse nodes are Gauss points inside each cell of the stored
// 1-D grid, so the piecewise-cubic profile is integrated cell by cell.

struct QuadSpec {
  int pts_per_cell = 3;
  int theta_panels = 2;
  int y1_pts = 4;

  QuadSpec refined() const { return {pts_per_cell * 2, theta_panels * 2, y1_pts * 2}; }
};

struct RegionIntegral {
  double energy = 0;
  double norm2 = 0;
};

namespace detail {

inline Rule gl_rule(int n) {
  switch (n) {
    case 3: return gauss_legendre<3>();
    case 4: return gauss_legendre<4>();
    case 6: return gauss_legendre<6>();
    case 8: return gauss_legendre<8>();
    case 12: return gauss_legendre<12>();
    case 16: return gauss_legendre<16>();
    case 24: return gauss_legendre<24>();
    case 32: return gauss_legendre<32>();
    default: throw InvalidInput("unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

// Nodes on [0, len] (len > 0) following the cells of spacing h.
inline Rule cell_rule(const Rule& base, double len, double h) {
  Rule out;
  int cells = static_cast<int>(std::ceil(len / h - 1e-12));
  for (int c = 0; c < cells; ++c) {
    double a = c * h, b = std::min(len, (c + 1) * h);
    for (std::size_t i = 0; i < base.x.size(); ++i) {
      out.x.push_back(a + 0.5 * (b - a) * (base.x[i] + 1));
      out.w.push_back(0.5 * (b - a) * base.w[i]);
    }
  }
  return out;
}

}  // namespace detail

inline RegionIntegral region_integral(const TrialState& ts, Region r, const QuadSpec& q = {}) {
  if (r == Region::Outside) return {};
  const auto& g = ts.geom;
  const double h = ts.gs.grid.h;
  Rule cell = detail::gl_rule(q.pts_per_cell);
  Rule tr = detail::cell_rule(cell, g.ell, h);
  RegionIntegral acc;

  if (!is_v(r)) {
    const bool lower = field_index(r) == 1;
    const bool plus = is_plus(r);
    Rule y1r = detail::gl_rule(q.y1_pts);
    double slope = lower ? std::tan((g.gamma + g.delta) / 2) : std::tan((g.gamma - g.delta) / 2);
    for (std::size_t a = 0; a < tr.x.size(); ++a) {
      double y2 = lower ? -tr.x[a] : tr.x[a];
      double lo = std::abs(y2) * slope;
      auto add = [&](double y1, double w) {
        Vec2 y(y1, y2);
        Vec2 x = plus ? y : g.reflect(y);
        TrialSample s = eval_trial_full(ts, x, r);
        acc.energy += w * s.density;
        acc.norm2 += w * s.norm2;
      };
      for (std::size_t b = 0; b < y1r.x.size(); ++b) {
        double y1 = lo + 0.5 * (ts.eps - lo) * (y1r.x[b] + 1);
        add(y1, tr.w[a] * 0.5 * (ts.eps - lo) * y1r.w[b]);
        double u = 0.5 * (y1r.x[b] + 1);
        double y1e = ts.eps - std::log1p(-u) / ts.kappa;
        add(y1e, tr.w[a] * 0.5 * y1r.w[b] / (ts.kappa * (1 - u)));
      }
    }
    return acc;
  }

  Sectors s(g);
  double th0, th1;
  switch (r) {
    case Region::V2plus: th0 = s.a1, th1 = s.a2; break;
    case Region::V2minus: th0 = s.a2, th1 = s.a3; break;
    case Region::V1minus: th0 = s.a5, th1 = s.a6; break;
    default: th0 = s.a6, th1 = s.a7; break;
  }
  Rule thr = panel_rule(detail::gl_rule(16), th0, th1, q.theta_panels);
  const bool plus = is_plus(r);
  for (std::size_t a = 0; a < thr.x.size(); ++a) {
    double th = thr.x[a];
    double sn = std::abs(plus ? std::sin(th) : std::sin(th - g.delta));
    for (std::size_t b = 0; b < tr.x.size(); ++b) {
      double tau = tr.x[b];
      double rr = tau / sn;
      Vec2 x(rr * std::cos(th), rr * std::sin(th));
      TrialSample smp = eval_trial_full(ts, x, r);
      double w = thr.w[a] * tr.w[b] * tau / (sn * sn);  // r dr dtheta
      acc.energy += w * smp.density;
      acc.norm2 += w * smp.norm2;
    }
  }
  return acc;
}

inline double region_energy(const TrialState& ts, Region r, const QuadSpec& q = {}) {
  return region_integral(ts, r, q).energy;
}

struct RayleighResult {
  double energy = 0, norm2 = 0, quotient = 0;
  double energy_coarse = 0;
  std::array<RegionIntegral, 8> regions{};
};

inline RayleighResult rayleigh(const TrialState& ts, const QuadSpec& q = {}) {
  auto sum = [&](const QuadSpec& qs, RayleighResult& out) {
    for (std::size_t k = 0; k < all_regions.size(); ++k) {
      out.regions[k] = region_integral(ts, all_regions[k], qs);
      out.energy += out.regions[k].energy;
      out.norm2 += out.regions[k].norm2;
    }
  };
  RayleighResult coarse, fine;
  sum(q, coarse);
  sum(q.refined(), fine);
  fine.energy_coarse = coarse.energy;
  if (std::abs(fine.energy - coarse.energy) > 0.01 * std::abs(fine.energy))
    throw QuadratureUnresolved("energy changes by more than 1% under quadrature refinement");
  fine.quotient = fine.energy / fine.norm2;
  return fine;
}

struct L2Breakdown {
  double plus = 0, minus = 0, total = 0;
};

inline L2Breakdown l2_breakdown(const TrialState& ts, const QuadSpec& q = {}) {
  L2Breakdown b;
  for (Region r : all_regions) {
    double n = region_integral(ts, r, q).norm2;
    (is_plus(r) ? b.plus : b.minus) += n;
  }
  b.total = b.plus + b.minus;
  return b;
}

}  // namespace magstep
