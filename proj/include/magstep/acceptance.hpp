#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "moments.hpp"
#include "trialstate.hpp"
#include "wedge2d.hpp"

namespace magstep::acceptance {

struct Note {
  std::string key;
  double value;
};

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::vector<Note> notes;    // numbers behind the verdict
  std::string message;        // failure reason or error text
  double seconds = 0;
};

namespace detail {

struct Recorder {
  CheckResult& r;
  void note(const std::string& k, double v) { r.notes.push_back({k, v}); }
  // records a sub-condition; the check passes only if all of them hold
  bool require(bool ok, const std::string& what) {
    if (!ok) {
      r.pass = false;
      if (!r.message.empty()) r.message += "; ";
      r.message += what;
    }
    return ok;
  }
};

inline GroundState1D ground(double b1, double b2) { return minimize_band(classify(b1, b2)); }

}  // namespace detail

// 1. de Gennes anchor
inline void check_degennes(detail::Recorder& rec) {
  DeGennes dg = degennes_oracle();
  GroundState1D a = detail::ground(1, -1), b = detail::ground(-1, 1);
  rec.note("theta0_oracle", dg.theta0);
  rec.note("beta_(1,-1)", a.beta_b);
  rec.note("xi_(1,-1)", a.xi_b);
  rec.note("xi_(-1,1)", b.xi_b);
  rec.require(std::abs(a.beta_b - dg.theta0) < 1e-6, "beta differs from the oracle");
  rec.require(std::abs(b.beta_b - dg.theta0) < 1e-6, "reflected beta differs from the oracle");
  // the band minimum sits at -sqrt(Theta0) for (-1,1) and at +sqrt(Theta0) for (1,-1)
  rec.require(std::abs(b.xi_b + std::sqrt(b.beta_b)) < 1e-5, "xi of (-1,1) is not -sqrt(beta)");
  rec.require(std::abs(a.xi_b - std::sqrt(a.beta_b)) < 1e-5, "xi of (1,-1) is not +sqrt(beta)");
}

// 2. uniform field
inline void check_uniform(detail::Recorder& rec) {
  StepField f = classify(1, 1);
  Grid1D g = default_grid(f);
  for (double xi : {-1.0, 0.0, 1.0}) {
    double m = mu(f, xi, g).mu;
    rec.note("mu(xi=" + std::to_string(static_cast<int>(xi)) + ")", m);
    rec.require(std::abs(m - 1) < 1e-5, "mu deviates from 1");
  }
}

// 3. |b| Theta0 < beta < |b|
inline void check_sandwich(detail::Recorder& rec) {
  double theta0 = degennes_oracle().theta0;
  for (double b : {-0.75, -0.5, -0.25}) {
    double beta = detail::ground(1, b).beta_b;
    rec.note("beta_(1," + std::to_string(b).substr(0, 5) + ")", beta);
    rec.require(std::abs(b) * theta0 < beta && beta < std::abs(b), "sandwich violated");
  }
}

// 4. moment identities
inline void check_moments(detail::Recorder& rec) {
  double w1 = 0, w3 = 0, wflip = 0, wj12 = 0, wj = 0;
  for (double b : {-1.0, -0.75, -0.5, -0.25, -0.1}) {
    GroundState1D ba = detail::ground(b, 1), ab = detail::ground(1, b);
    w1 = std::max(w1, std::abs(moment(ba, 1).value));
    w3 = std::max(w3, std::abs(moment(ba, 3).value - m3_closed_form(ba)));
    for (int n = 0; n <= 3; ++n) wflip = std::max(wflip, sign_flip_check(ab, ba, n));
    for (const GroundState1D* gs : {&ab, &ba}) {
      JBreakdown j = j_breakdown(*gs);
      double m1 = moment(*gs, 1).value, m3 = moment(*gs, 3).value;
      wj12 = std::max(wj12, std::abs(j.j1 + j.j2));
      wj = std::max(wj, std::abs(j.j_total - (-m3 + gs->xi_b * gs->xi_b * m1)));
    }
  }
  rec.note("max|M1|", w1);
  rec.note("max|M3-closed|", w3);
  rec.note("max sign-flip residual", wflip);
  rec.note("max|J1+J2|", wj12);
  rec.note("max|J+M3-xi^2 M1|", wj);
  rec.require(w1 < 1e-7, "M1 not zero");
  rec.require(w3 < 1e-5, "M3 closed form mismatch");
  rec.require(wflip < 1e-6, "sign flip identity");
  rec.require(wj12 < 1e-5, "J1 + J2 not zero");
  rec.require(wj < 1e-5, "J identity");
}

struct GapFit {
  double coefficient = 0;
  double noise = 0;
};

// least squares of (beta - Q) ~ c delta^2; noise from the quadrature refinement
inline GapFit gap_fit(const GroundState1D& gs, const std::vector<double>& deltas, std::vector<double>* quot = nullptr) {
  double num = 0, den = 0, noise = 0;
  for (double d : deltas) {
    RayleighResult r = rayleigh(make_trial(gs, d));
    if (quot) quot->push_back(r.quotient);
    num += (gs.beta_b - r.quotient) * d * d;
    den += d * d * d * d;
    noise = std::max(noise, std::abs(r.energy - r.energy_coarse) / r.norm2 / (d * d));
  }
  return {num / den, noise};
}

// 5. trial-state bound
inline void check_trial_bound(detail::Recorder& rec) {
  GroundState1D gs = detail::ground(1, -0.5), wrong = detail::ground(-0.5, 1);
  double m3 = moment(gs, 3).value;
  std::vector<double> deltas = {0.04, 0.02, 0.01}, q;
  GapFit fit = gap_fit(gs, deltas, &q);
  bool below = true;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    rec.note("Q-beta(delta=" + std::to_string(deltas[i]).substr(0, 4) + ")", q[i] - gs.beta_b);
    below = below && q[i] < gs.beta_b;
  }
  GapFit wfit = gap_fit(wrong, deltas);
  rec.note("gap coefficient", fit.coefficient);
  rec.note("target 0.5*M3^2/4", 0.5 * m3 * m3 / 4);
  rec.note("wrong-orientation coefficient", wfit.coefficient);
  rec.note("fit noise", std::max(fit.noise, wfit.noise));
  rec.require(below, "Rayleigh quotient not below beta");
  rec.require(fit.coefficient >= 0.5 * m3 * m3 / 4, "gap coefficient below 0.5 M3^2/4");
  rec.require(wfit.coefficient <= wfit.noise, "wrong orientation shows a gain");
}

// 6. per-region energy lemmas at delta = 0.005
inline void check_region_lemmas(detail::Recorder& rec) {
  const double d = 0.005, sd = std::sqrt(d);
  GroundState1D gs = detail::ground(1, -0.5);
  TrialState ts = make_trial(gs, d);
  RayleighResult r = rayleigh(ts);
  HalfLineIntegrals H = half_line_integrals(gs);
  double J2 = H.energy.plus - sd * H.cubic.plus;
  double J1 = -H.energy.minus - sd * H.cubic.minus;
  auto energy = [&](Region g) {
    for (std::size_t k = 0; k < all_regions.size(); ++k)
      if (all_regions[k] == g) return r.regions[k];
    return RegionIntegral{};
  };
  double tol = 5 * d * sd, worst = 0;
  for (Region g : {Region::V2plus, Region::V2minus, Region::V1plus, Region::V1minus}) {
    double target = 0.5 * sd * (field_index(g) == 1 ? J1 : J2);
    double dev = std::abs(energy(g).energy - target);
    rec.note(std::string(to_string(g)) + " - J/2 sqrt(delta)", energy(g).energy - target);
    worst = std::max(worst, dev);
  }
  double tp = energy(Region::T1plus).energy + energy(Region::T2plus).energy;
  double tm = energy(Region::T1minus).energy + energy(Region::T2minus).energy;
  double trel = std::abs(tp - tm) / tp;
  double l2 = 2 * ts.eta_norm2() + d * H.first.total();
  // quadrature margin: change of the norm under refinement
  double ncoarse = 0;
  for (Region g : all_regions) ncoarse += region_integral(ts, g).norm2;
  double margin = d * d * d + std::abs(r.norm2 - ncoarse);
  rec.note("tolerance 5 delta^1.5", tol);
  rec.note("T+/T- relative difference", trel);
  rec.note("norm2 - formula", r.norm2 - l2);
  rec.note("norm margin", margin);
  rec.require(worst < tol, "V-region energy off the lemma value");
  rec.require(trel < 1e-6, "T+ and T- energies differ");
  rec.require(std::abs(r.norm2 - l2) < margin, "L2 norm off the formula");
}

// 7. 2-D bound state at delta = 0.1
inline void check_bound_state(detail::Recorder& rec) {
  StepField f = classify(1, -0.5);
  double beta = minimize_band(f).beta_b;
  WedgeOptions o;  // default box: R = max(8 l, 20), h = 0.1 and 0.05
  EigenResult fine;
  GaugeField gf = make_gauge(f, 0.1);
  LambdaRow row = lambda_at(gf, beta, o, &fine);
  rec.note("beta", beta);
  rec.note("lambda coarse", row.coarse);
  rec.note("lambda fine", row.fine);
  rec.note("lambda extrapolated", row.extrapolated);
  rec.note("error estimate", row.error_estimate);
  rec.note("R_trunc", row.r_trunc);
  rec.require(row.gap > 3 * row.error_estimate, "no certified eigenvalue below beta");
  gf.tilt = o.symmetric_frame ? gf.delta / 2 : 0;
  double h = o.h / 2;
  try {
    double sym = symmetry_check(fine, gf.reflection());
    rec.note("symmetry mismatch", sym);
    rec.require(sym < 5 * h * h, "symmetry mismatch above 5 h^2");
  } catch (const Error& e) {
    rec.require(false, e.what());
  }
  try {
    AgmonFit a = agmon_fit(fine, beta, row.r_trunc);
    rec.note("agmon rate", a.rate);
    rec.require(a.rate >= 0.5 * std::sqrt(row.gap), "decay rate below 0.5 sqrt(gap)");
  } catch (const Error& e) {
    rec.require(false, e.what());
  }
}

// second derivative of the band function at its minimum
inline double band_curvature(const GroundState1D& gs) {
  Grid1D g = default_grid(gs.field);
  const double e = 1e-3;
  double p = weber_solve(gs.field, gs.xi_b + e, g, gs.beta_b, {}).mu;
  double m = weber_solve(gs.field, gs.xi_b - e, g, gs.beta_b, {}).mu;
  return (p - 2 * gs.beta_b + m) / (e * e);
}

// 8. essential-spectrum threshold at delta = 0
inline void check_threshold(detail::Recorder& rec) {
  GroundState1D gs = detail::ground(1, -0.5);
  const double beta = gs.beta_b, R1 = 20, R2 = 12;
  GaugeField gf = make_gauge(gs.field, 0);
  std::vector<double> lam;
  for (double h : {0.16, 0.08, 0.04}) {
    Mesh m = make_mesh(R1, R2, h, [](double, double) { return true; });
    lam.push_back(lowest_eig(assemble(m, gf), 1, 0.9 * beta).values[0]);
    rec.note("lambda(h=" + std::to_string(h).substr(0, 4) + ")", lam.back());
  }
  double order = std::log2((lam[0] - lam[1]) / (lam[1] - lam[2]));
  double ext = (4 * lam[2] - lam[1]) / 3;
  double curv = band_curvature(gs);
  double est = 0.5 * curv * std::pow(M_PI / (2 * R1), 2);
  rec.note("observed order", order);
  rec.note("extrapolated - beta", ext - beta);
  rec.note("truncation estimate", est);
  rec.require(order > 1.8 && order < 2.2, "convergence order not about 2");
  rec.require(ext > beta, "limit not above beta");
  rec.require(std::abs((ext - beta) / est - 1) < 0.25, "limit not at beta plus the box shift");
}

// best available lambda_b(delta): Richardson on a long tube around the barrier
inline double reference_lambda(const StepField& f, double delta, double beta) {
  WedgeOptions o;
  o.h = 0.16;
  o.r_trunc = 200;
  o.tube_width = 8;
  o.k = 1;
  return lambda_at(make_gauge(f, delta), beta, o).extrapolated;
}

// 9. bounded-domain sweep
inline void check_domain_sweep(detail::Recorder& rec) {
  StepField f = classify(1, -0.5);
  double beta = minimize_band(f).beta_b;
  double ref = reference_lambda(f, 0.1, beta);
  DomainSpec s;
  DomainSweep sw = lambda1_sweep(s, {50, 100, 200, 400}, ref);
  rec.note("reference lambda_b(0.1)", ref);
  for (const auto& r : sw.rows) rec.note("lambda1/B (B=" + std::to_string(static_cast<int>(r.B)) + ")", r.per_B);
  rec.require(sw.errors_decreasing, "|lambda1/B - lambda_b| not strictly decreasing");
  rec.require(sw.increasing_top_half, "lambda1 not increasing on the top half");
}

// 10. IMS identity and the outer lower bound
inline void check_ims(detail::Recorder& rec) {
  StepField f = classify(1, -0.5);
  double beta = minimize_band(f).beta_b;
  const double h = 0.1, R = 26;  // at least 8 l(0.1) = 25.3
  GaugeField gf = make_gauge(f, 0.1);
  SparseOperator2D op = assemble_wedge(gf, R, h);
  const Mesh& m = op.mesh;
  std::mt19937_64 rng(7);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  Eigen::VectorXcd v(m.unknowns());
  for (int k = 0; k < m.unknowns(); ++k) v[k] = cplx(unit(), unit());
  auto radial = partition_from(m, [](const Vec2& x) { return (x.norm() - 4) / 8; });
  auto angular = partition_from(m, [](const Vec2& x) {
    // 0 on [0, 2pi/3] and [4pi/3, 2pi] away from the edges, 1 around pi
    double th = polar_angle(x);
    double d = std::abs(th - M_PI);
    return std::clamp((M_PI / 2 - d) / (M_PI / 6), 0.0, 1.0);
  });
  Eigen::VectorXd one = Eigen::VectorXd::Ones(m.unknowns()), zero = Eigen::VectorXd::Zero(m.unknowns());
  double r_rad = ims_property_check(op, radial, v);
  double r_ang = ims_property_check(op, angular, v);
  double r_triv = ims_property_check(op, {one, zero}, v);
  rec.note("radial residual", r_rad);
  rec.note("angular residual", r_ang);
  rec.note("trivial residual", r_triv);
  rec.note("10 h^2", 10 * h * h);
  rec.require(r_rad < 10 * h * h, "radial IMS residual");
  rec.require(r_ang < 10 * h * h, "angular IMS residual");
  rec.require(r_triv == 0, "trivial partition residual not zero");
  // lowest quotient among functions supported in |x| > r
  std::vector<double> radii = {2, 4, 8}, cr;
  for (double r : radii) {
    Mesh mo = make_mesh(R, R, h, [&](double x, double y) { return std::hypot(x, y) > r; });
    double q = lowest_eig(assemble(mo, gf), 1, 0.9 * beta).values[0];
    rec.note("q(r=" + std::to_string(static_cast<int>(r)) + ") - beta", q - beta);
    cr.push_back(std::max(0.0, beta - q) * r * r);
  }
  bool trend = true;
  for (std::size_t i = 1; i < cr.size(); ++i) trend = trend && cr[i] <= 1.5 * cr[0] + 1e-12;
  rec.require(trend, "deficit does not follow C/R^2");
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<void(detail::Recorder&)> run;
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "de Gennes anchor", 10, check_degennes},
      {2, "uniform field", 5, check_uniform},
      {3, "bound sandwich", 30, check_sandwich},
      {4, "moment identities", 120, check_moments},
      {5, "trial-state bound", 600, check_trial_bound},
      {6, "region energy lemmas", 600, check_region_lemmas},
      {7, "2-D bound state", 1200, check_bound_state},
      {8, "essential-spectrum threshold", 600, check_threshold},
      {9, "bounded-domain sweep", 1800, check_domain_sweep},
      {10, "IMS identity", 120, check_ims},
  };
  return list;
}

inline CheckResult run(const Criterion& c) {
  CheckResult r;
  r.id = c.id;
  r.name = c.name;
  r.pass = true;
  detail::Recorder rec{r};
  auto t0 = std::chrono::steady_clock::now();
  try {
    c.run(rec);
  } catch (const std::exception& e) {
    rec.require(false, std::string("exception: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.require(r.seconds < c.limit_seconds, "runtime over " + std::to_string(static_cast<int>(c.limit_seconds)) + " s");
  return r;
}

}  // namespace magstep::acceptance
