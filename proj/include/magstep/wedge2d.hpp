#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "fiber1d.hpp"
#include "lanczos.hpp"
#include "trialstate.hpp"

namespace magstep {

// Piecewise-constant field on the broken-line geometry: b1 below the barrier
// (Omega_1), b2 above, times an overall strength B. With tilt = 0 the barrier
// is the positive x1 axis plus the ray at angle pi + delta; a nonzero tilt
// rotates the whole picture by -tilt (the spectrum does not change). The
// barrier is the graph x2 = g(x1).
struct GaugeField {
  double b1 = 1, b2 = -0.5, delta = 0, B = 1;
  double tilt = 0;

  double slope_right() const { return -std::tan(tilt); }
  double slope_left() const { return std::tan(delta - tilt); }
  double g(double x1) const { return x1 >= 0 ? x1 * slope_right() : x1 * slope_left(); }
  bool in_omega1(double x1, double x2) const { return x2 < g(x1); }
  double sigma(double x1, double x2) const { return in_omega1(x1, x2) ? b1 : b2; }
  // A = (-int_0^{x2} field ds, 0); for tilt = 0 this is A_{b,delta}
  double A1(double x1, double x2) const {
    if (!in_omega1(x1, x2)) return -B * b2 * x2;
    return B * (-b1 * x2 + (b1 - b2) * g(x1));
  }
  // A = sigma (-x2, 0) + grad zeta
  double zeta(double x1, double x2) const {
    if (!in_omega1(x1, x2)) return 0;
    double G = 0.5 * x1 * x1 * (x1 >= 0 ? slope_right() : slope_left());
    return B * (b1 - b2) * G;
  }
  // unit vectors along the two arms
  Vec2 arm_right() const { return {std::cos(tilt), -std::sin(tilt)}; }
  Vec2 arm_left() const { return {-std::cos(delta - tilt), -std::sin(delta - tilt)}; }
  // S_delta in this frame: reflection across the bisector of the two arms
  Eigen::Matrix2d reflection() const {
    double phi = 2 * ((M_PI + delta) / 2 - tilt);
    Eigen::Matrix2d S;
    S << std::cos(phi), std::sin(phi), std::sin(phi), -std::cos(phi);
    return S;
  }
};

inline GaugeField make_gauge(const StepField& f, double delta, double B = 1, double tilt = 0) {
  return {f.b1, f.b2, delta, B, tilt};
}

// Uniform node lattice (x0 + i h, y0 + j h); index[i + nx j] = -1 marks a
// Dirichlet node.
struct Mesh {
  double h = 0.1;
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0;
  std::vector<int> index;
  std::vector<int> node;  // unknown -> lattice position

  double x(int i) const { return x0 + i * h; }
  double y(int j) const { return y0 + j * h; }
  int at(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return -1;
    return index[i + static_cast<std::size_t>(nx) * j];
  }
  Vec2 point(int k) const { return {x(node[k] % nx), y(node[k] / nx)}; }
  int unknowns() const { return static_cast<int>(node.size()); }
};

// Lattice with the origin as a node, covering [-hx, hx] x [-hy, hy];
// `inside` selects unknowns, everything else is Dirichlet.
inline Mesh make_mesh(double half_x, double half_y, double h, const std::function<bool(double, double)>& inside) {
  if (!(h > 0)) throw InvalidInput("mesh spacing must be positive");
  Mesh m;
  m.h = h;
  int Nx = static_cast<int>(std::lround(half_x / h)), Ny = static_cast<int>(std::lround(half_y / h));
  m.nx = 2 * Nx + 1;
  m.ny = 2 * Ny + 1;
  m.x0 = -Nx * h;
  m.y0 = -Ny * h;
  m.index.assign(static_cast<std::size_t>(m.nx) * m.ny, -1);
  for (int j = 1; j < m.ny - 1; ++j)
    for (int i = 1; i < m.nx - 1; ++i)
      if (inside(m.x(i), m.y(j))) {
        m.index[i + static_cast<std::size_t>(m.nx) * j] = m.unknowns();
        m.node.push_back(i + m.nx * j);
      }
  return m;
}

struct SparseOperator2D {
  Mesh mesh;
  SpMat H;
  GaugeField field;
};

enum class LinkRule { Exact, Midpoint };

// Phase of the horizontal link (x, y) -> (x + h, y). A1 is continuous and
// piecewise linear along the link with kinks at x1 = 0 and where the tilted arm
// crosses, so splitting there makes the midpoint rule exact; every plaquette
// then carries exactly the flux of the step field through it.
inline double link_phase(const GaugeField& f, double x, double y, double h, LinkRule rule = LinkRule::Exact) {
  if (rule == LinkRule::Midpoint) return h * f.A1(x + 0.5 * h, y);
  std::array<double, 3> cuts;
  int nc = 0;
  auto add = [&](double c) {
    if (x < c && c < x + h) cuts[nc++] = c;
  };
  add(0);
  // crossings with the arms: x1 < 0 on the left one, x1 > 0 on the right one
  if (f.slope_left() != 0 && y / f.slope_left() < 0) add(y / f.slope_left());
  if (f.slope_right() != 0 && y / f.slope_right() > 0) add(y / f.slope_right());
  std::sort(cuts.begin(), cuts.begin() + nc);
  double a = x, sum = 0;
  for (int k = 0; k <= nc; ++k) {
    double b = k < nc ? cuts[k] : x + h;
    sum += (b - a) * f.A1(0.5 * (a + b), y);
    a = b;
  }
  return sum;
}

// Extra node phase zeta_n turns link phases into theta + zeta_m - zeta_n; V is
// an optional diagonal potential (used for negative controls).
struct AssemblyExtras {
  std::function<double(double, double)> node_phase;
  std::function<double(double, double)> potential;
  LinkRule rule = LinkRule::Exact;
};

inline SparseOperator2D assemble(const Mesh& mesh, const GaugeField& f, const AssemblyExtras& extra = {}) {
  const int n = mesh.unknowns();
  const double h = mesh.h, ih2 = 1 / (h * h);
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  auto zeta = [&](double x, double y) { return extra.node_phase ? extra.node_phase(x, y) : 0.0; };
  for (int k = 0; k < n; ++k) {
    int i = mesh.node[k] % mesh.nx, j = mesh.node[k] / mesh.nx;
    double x = mesh.x(i), y = mesh.y(j);
    double diag = 4 * ih2 + (extra.potential ? extra.potential(x, y) : 0.0);
    trip.emplace_back(k, k, diag);
    // right neighbour: entry (m, n) = -exp(i theta_{n->m}) / h^2
    if (int r = mesh.at(i + 1, j); r >= 0) {
      double th = link_phase(f, x, y, h, extra.rule) + zeta(x + h, y) - zeta(x, y);
      cplx e = -std::polar(ih2, th);
      trip.emplace_back(r, k, e);
      trip.emplace_back(k, r, std::conj(e));
    }
    if (int u = mesh.at(i, j + 1); u >= 0) {
      double th = zeta(x, y + h) - zeta(x, y);
      cplx e = -std::polar(ih2, th);
      trip.emplace_back(u, k, e);
      trip.emplace_back(k, u, std::conj(e));
    }
  }
  SparseOperator2D op;
  op.mesh = mesh;
  op.field = f;
  op.H.resize(n, n);
  op.H.setFromTriplets(trip.begin(), trip.end());
  op.H.makeCompressed();
  return op;
}

inline double hermiticity_defect(const SpMat& H) {
  SpMat D = H - SpMat(H.adjoint());
  double m = 0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SpMat::InnerIterator it(D, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

// Flux through the plaquette with lower-left corner (x, y), divided by h^2.
inline double plaquette_curl(const GaugeField& f, double x, double y, double h, LinkRule rule = LinkRule::Exact) {
  return (link_phase(f, x, y, h, rule) - link_phase(f, x, y + h, h, rule)) / (h * h);
}

inline double default_r_trunc(double delta) {
  return std::max(8 / std::sqrt(std::max(delta, 1e-300)), 20.0);
}

inline SparseOperator2D assemble_wedge(const GaugeField& f, double r_trunc, double h) {
  double bmax = std::max(std::abs(f.b1), std::abs(f.b2)) * f.B;
  if (!(h < 0.2 / std::sqrt(bmax))) throw MeshTooCoarse("h must be below 0.2/sqrt(max|b|)");
  if (f.delta > 0 && r_trunc < 8 / std::sqrt(f.delta)) throw InvalidInput("R_trunc must be at least 8 l(delta)");
  Mesh m = make_mesh(r_trunc, r_trunc, h, [](double, double) { return true; });
  return assemble(m, f);
}

// Distance to the broken line.
inline double barrier_distance(const Vec2& x, const GaugeField& f) {
  auto ray = [&](const Vec2& d) {
    double t = x.dot(d);
    return t <= 0 ? x.norm() : (x - t * d).norm();
  };
  return std::min(ray(f.arm_right()), ray(f.arm_left()));
}

// Truncation to {|x| < R, dist(x, barrier) < width}. The bound state lives
// along the barrier arms with a long tail in the arm direction and a Gaussian
// profile across, so this reaches much larger R than a square of equal size.
// The set is S_delta-invariant.
inline SparseOperator2D assemble_wedge_tube(const GaugeField& f, double r_trunc, double width, double h) {
  double bmax = std::max(std::abs(f.b1), std::abs(f.b2)) * f.B;
  if (!(h < 0.2 / std::sqrt(bmax))) throw MeshTooCoarse("h must be below 0.2/sqrt(max|b|)");
  if (f.delta > 0 && r_trunc < 8 / std::sqrt(f.delta)) throw InvalidInput("R_trunc must be at least 8 l(delta)");
  if (!(width > 0)) throw InvalidInput("tube width must be positive");
  Mesh m = make_mesh(r_trunc, r_trunc, h, [&](double x, double y) {
    Vec2 p(x, y);
    return p.norm() < r_trunc && barrier_distance(p, f) < width;
  });
  return assemble(m, f);
}

struct EigenResult {
  std::vector<double> values;
  Eigen::MatrixXcd vectors;  // columns normalized in the discrete L2 norm (h^2 sum)
  std::vector<double> residuals;
  Mesh mesh;
  double extrapolated = NAN;
};

inline EigenResult lowest_eig(const SparseOperator2D& op, int k = 1, double shift = 0.0) {
  LanczosOptions o;
  o.k = k;
  o.shift = shift;
  LanczosResult r = lowest_eigs_auto(op.H, o);
  EigenResult e;
  e.values = r.values;
  e.residuals = r.residuals;
  e.vectors = r.vectors / op.mesh.h;
  e.mesh = op.mesh;
  return e;
}

// ---------------------------------------------------------------------------
// lambda_b(delta) on the truncated plane, two mesh levels and Richardson.

struct WedgeOptions {
  double h = 0.1;           // coarse level; the fine level is h/2
  double r_trunc = 0;       // 0: default_r_trunc(delta)
  double tube_width = 0;    // 0: square box, otherwise assemble_wedge_tube
  // rotate by delta/2 so both arms cross the lattice at the same angle and
  // S_delta becomes the lattice reflection x1 -> -x1
  bool symmetric_frame = true;
  int k = 2;
};

inline SparseOperator2D assemble_wedge(const GaugeField& f, const WedgeOptions& o, double r_trunc, double h) {
  return o.tube_width > 0 ? assemble_wedge_tube(f, r_trunc, o.tube_width, h) : assemble_wedge(f, r_trunc, h);
}

struct LambdaRow {
  double delta = 0, h = 0, r_trunc = 0;
  double coarse = 0, fine = 0, extrapolated = 0;
  double error_estimate = 0;  // |fine - coarse| / 3
  double gap = 0;             // beta - extrapolated
  double second_fine = 0;     // next eigenvalue on the fine mesh
  double residual = 0;
};

struct LambdaTable {
  double beta = 0;
  std::vector<LambdaRow> rows;
  double gap_coefficient = 0;  // least squares gap ~ c delta^2
};

inline LambdaRow lambda_at(const GaugeField& field, double beta, const WedgeOptions& o, EigenResult* fine_out = nullptr) {
  if (!(field.delta >= 0 && field.delta <= 0.3)) throw InvalidInput("delta must lie in [0, 0.3]");
  LambdaRow row;
  row.delta = field.delta;
  row.h = o.h;
  row.r_trunc = o.r_trunc > 0 ? o.r_trunc : default_r_trunc(field.delta);
  double shift = 0.9 * beta;
  GaugeField f = field;
  if (o.symmetric_frame) f.tilt = f.delta / 2;
  EigenResult c = lowest_eig(assemble_wedge(f, o, row.r_trunc, o.h), o.k, shift);
  EigenResult e = lowest_eig(assemble_wedge(f, o, row.r_trunc, o.h / 2), o.k, shift);
  row.coarse = c.values[0];
  row.fine = e.values[0];
  row.extrapolated = (4 * row.fine - row.coarse) / 3;
  row.error_estimate = std::abs(row.fine - row.coarse) / 3;
  row.gap = beta - row.extrapolated;
  row.second_fine = o.k > 1 ? e.values[1] : NAN;
  row.residual = e.residuals[0];
  e.extrapolated = row.extrapolated;
  if (fine_out) *fine_out = std::move(e);
  return row;
}

inline LambdaTable lambda_delta(const StepField& field, const std::vector<double>& deltas, const WedgeOptions& o = {}) {
  LambdaTable t;
  t.beta = minimize_band(field).beta_b;
  double num = 0, den = 0;
  for (double d : deltas) {
    if (!(d > 0 && d <= 0.3)) throw InvalidInput("each delta must lie in (0, 0.3]");
    LambdaRow r = lambda_at(make_gauge(field, d), t.beta, o);
    num += r.gap * d * d;
    den += d * d * d * d;
    t.rows.push_back(r);
  }
  t.gap_coefficient = den > 0 ? num / den : 0;
  return t;
}

// ---------------------------------------------------------------------------
// Diagnostics on a computed eigenvector.

// Bilinear interpolation of |u| at x; NaN outside the lattice.
inline double interp_modulus(const EigenResult& r, int col, const Vec2& x) {
  const Mesh& m = r.mesh;
  double fi = (x[0] - m.x0) / m.h, fj = (x[1] - m.y0) / m.h;
  int i = static_cast<int>(std::floor(fi)), j = static_cast<int>(std::floor(fj));
  if (i < 0 || j < 0 || i + 1 >= m.nx || j + 1 >= m.ny) return NAN;
  double u = fi - i, v = fj - j;
  auto val = [&](int a, int b) {
    int k = m.at(a, b);
    return k < 0 ? 0.0 : std::abs(r.vectors(k, col));
  };
  return (1 - u) * (1 - v) * val(i, j) + u * (1 - v) * val(i + 1, j) + (1 - u) * v * val(i, j + 1) +
         u * v * val(i + 1, j + 1);
}

// max | |u(x)| - |u(S x)| | over nodes, with u scaled to max |u| = 1.
inline double symmetry_check(const EigenResult& r, const Eigen::Matrix2d& S) {
  if (r.values.size() < 2) throw InvalidInput("symmetry_check needs the second eigenvalue to test simplicity");
  if (!(r.values[1] - r.values[0] > 10 * r.residuals[0])) throw DegenerateEigenvalue("ground eigenvalue is not simple");
  double umax = r.vectors.col(0).cwiseAbs().maxCoeff();
  double worst = 0;
  for (int k = 0; k < r.mesh.unknowns(); ++k) {
    Vec2 x = r.mesh.point(k);
    double other = interp_modulus(r, 0, S * x);
    if (std::isnan(other)) continue;
    worst = std::max(worst, std::abs(std::abs(r.vectors(k, 0)) - other) / umax);
  }
  return worst;
}

struct AgmonFit {
  double rate = 0;
  double intercept = 0;
  int points = 0;
};

// Least-squares fit of log|u| = a - rate |x| over 0.3 R < |x| < 0.7 R.
inline AgmonFit agmon_fit(const EigenResult& r, double beta, double r_trunc) {
  if (!(r.values[0] < beta)) throw NoBoundState("lowest eigenvalue is not below the threshold");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 0; k < r.mesh.unknowns(); ++k) {
    double rad = r.mesh.point(k).norm();
    double a = std::abs(r.vectors(k, 0));
    if (rad <= 0.3 * r_trunc || rad >= 0.7 * r_trunc || !(a > 1e-300)) continue;
    double ly = std::log(a);
    sx += rad, sy += ly, sxx += rad * rad, sxy += rad * ly;
    ++n;
  }
  if (n < 3) throw InvalidInput("agmon_fit: annulus holds too few nodes");
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {-slope, (sy - slope * sx) / n, n};
}

// ---------------------------------------------------------------------------
// Dirichlet problem on a bounded domain with the barrier through the origin.

struct DomainSpec {
  double a = 4, b = 2;  // ellipse semi-axes
  double delta = 0.1;
  double b1 = 1, b2 = -0.5;
  double B = 1;

  bool inside(double x1, double x2) const { return (x1 * x1) / (a * a) + (x2 * x2) / (b * b) < 1; }
};

inline SparseOperator2D assemble_domain(const DomainSpec& s, double h) {
  if (!(s.a > 0 && s.b > 0)) throw InvalidInput("domain semi-axes must be positive");
  double bmax = std::max(std::abs(s.b1), std::abs(s.b2)) * s.B;
  if (bmax > 0 && h > 0.2 / std::sqrt(bmax) * (1 + 1e-12)) throw MeshTooCoarse("h must resolve the magnetic length");
  Mesh m = make_mesh(s.a, s.b, h, [&](double x, double y) { return s.inside(x, y); });
  return assemble(m, GaugeField{s.b1, s.b2, s.delta, s.B});
}

struct DomainRow {
  double B = 0, h = 0;
  double coarse = 0, fine = 0;  // lambda_1 at h and h/2
  double lambda1 = 0;           // Richardson value
  double per_B = 0, error = 0, excess = 0;
  double mass_radius = 0;       // radius holding 90% of |u|^2 (fine mesh)
};

struct DomainSweep {
  double reference = 0;
  std::vector<DomainRow> rows;
  bool errors_decreasing = false;
  bool increasing_top_half = false;
  bool from_above = false;
};

inline double mass_radius(const EigenResult& r, double fraction) {
  std::vector<std::pair<double, double>> pts;
  double total = 0;
  for (int k = 0; k < r.mesh.unknowns(); ++k) {
    double w = std::norm(r.vectors(k, 0));
    pts.emplace_back(r.mesh.point(k).norm(), w);
    total += w;
  }
  std::sort(pts.begin(), pts.end());
  double acc = 0;
  for (auto& [rad, w] : pts) {
    acc += w;
    if (acc >= fraction * total) return rad;
  }
  return pts.empty() ? 0 : pts.back().first;
}

// Meshes h = 0.2/sqrt(B) and h/2 keep B h^2 fixed; lambda_1 is the Richardson
// value of the two. `reference` is lambda_b(delta).
inline DomainSweep lambda1_sweep(const DomainSpec& tmpl, const std::vector<double>& Bs, double reference) {
  for (std::size_t i = 0; i < Bs.size(); ++i)
    if (!(Bs[i] > 0) || (i > 0 && !(Bs[i] > Bs[i - 1]))) throw InvalidInput("B values must be positive and ascending");
  DomainSweep sw;
  sw.reference = reference;
  for (std::size_t i = 0; i < Bs.size(); ++i) {
    DomainSpec s = tmpl;
    s.B = Bs[i];
    double h = 0.2 / std::sqrt(Bs[i] * std::max(std::abs(s.b1), std::abs(s.b2)));
    DomainRow row;
    row.B = Bs[i];
    row.h = h;
    // lambda_1 / B stays above min|b| Theta_0, so half of it is a safe shift
    double shift = 0.5 * 0.59 * std::min(std::abs(s.b1), std::abs(s.b2)) * s.B;
    row.coarse = lowest_eig(assemble_domain(s, h), 1, shift).values[0];
    EigenResult e = lowest_eig(assemble_domain(s, h / 2), 1, shift);
    row.fine = e.values[0];
    row.lambda1 = (4 * row.fine - row.coarse) / 3;
    row.per_B = row.lambda1 / row.B;
    row.error = std::abs(row.per_B - reference);
    row.excess = row.lambda1 - row.B * reference;
    row.mass_radius = mass_radius(e, 0.9);
    sw.rows.push_back(row);
  }
  sw.errors_decreasing = true;
  sw.from_above = true;
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    if (i > 0 && !(sw.rows[i].error < sw.rows[i - 1].error)) sw.errors_decreasing = false;
    if (!(sw.rows[i].excess > 0)) sw.from_above = false;
  }
  sw.increasing_top_half = true;
  for (std::size_t i = sw.rows.size() / 2; i + 1 < sw.rows.size(); ++i)
    if (!(sw.rows[i + 1].lambda1 > sw.rows[i].lambda1)) sw.increasing_top_half = false;
  return sw;
}

// ---------------------------------------------------------------------------
// Discrete IMS identity. With Q_h(v) = sum over edges |v_m - U v_n|^2 and a
// nodal partition sum_j chi_j^2 = 1,
//   Q_h(v) = sum_j Q_h(chi_j v) - sum_j sum_edges (chi_j(m) - chi_j(n))^2 Re(conj(v_m) U v_n)
// holds exactly. The continuum gradient term replaces Re(conj(v_m) U v_n) by
// (|v_m|^2 + |v_n|^2)/2; the returned residual is that difference over Q_h(v).

inline double form_value(const SparseOperator2D& op, const Eigen::VectorXcd& v) {
  return (v.adjoint() * (op.H * v))(0).real() * op.mesh.h * op.mesh.h;
}

inline double ims_property_check(const SparseOperator2D& op, const std::vector<Eigen::VectorXd>& chis,
                                 const Eigen::VectorXcd& v) {
  const Mesh& m = op.mesh;
  double lhs = form_value(op, v);
  double rhs = 0;
  for (const auto& chi : chis) rhs += form_value(op, (chi.cast<cplx>().array() * v.array()).matrix());
  // gradient term: sum over interior edges and over edges to Dirichlet nodes
  // (chi is extended by its nodal value, so those edges contribute nothing)
  double grad = 0;
  for (int k = 0; k < m.unknowns(); ++k) {
    int i = m.node[k] % m.nx, j = m.node[k] / m.nx;
    for (int nb : {m.at(i + 1, j), m.at(i, j + 1)}) {
      if (nb < 0) continue;
      double avg = 0.5 * (std::norm(v[k]) + std::norm(v[nb]));
      for (const auto& chi : chis) {
        double d = chi[nb] - chi[k];
        grad += d * d * avg;
      }
    }
  }
  return std::abs(lhs - (rhs - grad)) / lhs;
}

// Nodal partition from a scalar profile: chi1 = cos(pi/2 s), chi2 = sin(pi/2 s)
// with s in [0, 1].
inline std::vector<Eigen::VectorXd> partition_from(const Mesh& m, const std::function<double(const Vec2&)>& s) {
  Eigen::VectorXd c1(m.unknowns()), c2(m.unknowns());
  for (int k = 0; k < m.unknowns(); ++k) {
    double v = std::clamp(s(m.point(k)), 0.0, 1.0);
    c1[k] = std::cos(M_PI / 2 * v);
    c2[k] = std::sin(M_PI / 2 * v);
  }
  return {c1, c2};
}

}  // namespace magstep
