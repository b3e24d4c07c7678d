#pragma once

#include <cmath>

#include "fiber1d.hpp"

namespace magstep {

struct MomentReport {
  int n = 0;
  double value = 0;
  double quadrature_error_estimate = 0;
};

namespace detail {

// Simpson on each half-line (the integrand may jump at t = 0) at spacing h and
// 2h; f(i, t, sigma) is the integrand at node i.
template <class F>
std::pair<double, double> split_simpson(const GroundState1D& gs, F&& f) {
  const Grid1D& g = gs.grid;
  const int nl = g.i0, nr = g.n - 1 - g.i0;
  if (nl % 4 || nr % 4) throw InvalidInput("moment quadrature needs a multiple of 4 cells per side");
  auto left = [&](int i) { return f(i, g.t(i), gs.field.b1); };
  auto right = [&](int i) { return f(i, g.t(i), gs.field.b2); };
  double fine = simpson(left, 0, g.i0, g.h) + simpson(right, g.i0, g.n - 1, g.h);
  double coarse = simpson(left, 0, g.i0, g.h, 2) + simpson(right, g.i0, g.n - 1, g.h, 2);
  return {fine, std::abs(fine - coarse) / 15.0};
}

}  // namespace detail

// M_n = int (1/sigma) (xi + sigma t)^n |phi|^2
inline MomentReport moment(const GroundState1D& gs, int n) {
  if (n < 0) throw InvalidInput("moment order must be non-negative");
  const double xi = gs.xi_b;
  auto [v, e] = detail::split_simpson(gs, [&](int i, double t, double s) {
    return std::pow(xi + s * t, n) * gs.phi[i] * gs.phi[i] / s;
  });
  return {n, v, e};
}

// (1/3)(1/b - 1) xi phi(0) phi'(0), valid for (b, 1) with b in [-1, 0).
inline double m3_closed_form(const GroundState1D& gs) {
  double b = gs.field.b1;
  if (!(gs.field.b2 == 1 && b >= -1 && b < 0))
    throw WrongOrientation("closed form holds for fields (b, 1) with b in [-1, 0); reflect first");
  return (1.0 / 3.0) * (1.0 / b - 1.0) * gs.xi_b * gs.phi0 * gs.dphi0;
}

inline double sign_flip_check(const GroundState1D& ab, const GroundState1D& ba, int n) {
  if (ab.field.b1 != ba.field.b2 || ab.field.b2 != ba.field.b1)
    throw InvalidInput("sign_flip_check needs (b1, b2) and (b2, b1)");
  double sgn = n % 2 ? -1.0 : 1.0;
  return std::abs(moment(ab, n).value - sgn * moment(ba, n).value);
}

// Half-line pieces used by the J decomposition and the region energy lemmas.
struct HalfLine {
  double minus = 0, plus = 0;
  double total() const { return minus + plus; }
};

struct HalfLineIntegrals {
  HalfLine first;   // int t |phi|^2
  HalfLine energy;  // int (|phi'|^2 + (sigma t + xi)^2 |phi|^2) t
  HalfLine cubic;   // int (sigma t + xi)(sigma t + 2 xi) |phi|^2 t
};

inline HalfLineIntegrals half_line_integrals(const GroundState1D& gs) {
  const Grid1D& g = gs.grid;
  const double xi = gs.xi_b;
  auto side = [&](int lo, int hi, double s, auto&& f) {
    return simpson([&](int i) { return f(i, g.t(i), s); }, lo, hi, g.h);
  };
  auto first = [&](int i, double t, double) { return t * gs.phi[i] * gs.phi[i]; };
  auto energy = [&](int i, double t, double s) {
    double a = s * t + xi;
    return (gs.dphi[i] * gs.dphi[i] + a * a * gs.phi[i] * gs.phi[i]) * t;
  };
  auto cubic = [&](int i, double t, double s) {
    return (s * t + xi) * (s * t + 2 * xi) * gs.phi[i] * gs.phi[i] * t;
  };
  HalfLineIntegrals r;
  const double b1 = gs.field.b1, b2 = gs.field.b2;
  r.first = {side(0, g.i0, b1, first), side(g.i0, g.n - 1, b2, first)};
  r.energy = {side(0, g.i0, b1, energy), side(g.i0, g.n - 1, b2, energy)};
  r.cubic = {side(0, g.i0, b1, cubic), side(g.i0, g.n - 1, b2, cubic)};
  return r;
}

struct JBreakdown {
  double j1 = 0, j2 = 0, j3 = 0, j_total = 0;
};

inline JBreakdown j_breakdown(const GroundState1D& gs) {
  if (!gs.field.trapping()) throw InvalidInput("J decomposition needs a trapping field");
  HalfLineIntegrals h = half_line_integrals(gs);
  JBreakdown j;
  j.j1 = -gs.beta_b * h.first.total();
  j.j2 = h.energy.total();
  j.j3 = -h.cubic.total();
  j.j_total = j.j1 + j.j2 + j.j3;
  return j;
}

}  // namespace magstep
