// magstep: command-line front end for the step-field computations.
//
// Every subcommand writes one file (or stdout): JSON with {config, results,
// checks}, or CSV with the config echoed as '#' comment lines above the table.
// Nothing time-dependent goes into the output, so equal configs give equal bytes.
// Exit codes: 0 ok, 1 invalid input or failed check, 2 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <magstep/acceptance.hpp>
#include <magstep/version.hpp>

using json = nlohmann::ordered_json;
using namespace magstep;

namespace {

// Defaults table. README mirrors it; change both together.
struct Defaults {
  static constexpr double b1 = 1.0;
  static constexpr double b2 = -0.5;
  static constexpr int grid_n = 4001;          // 1-D nodes on [-L, L], L = 12/sqrt(min|b|)
  static constexpr double xi_min = -3, xi_max = 3;
  static constexpr int xi_count = 61;
  static constexpr int phi_rows = 401;         // decimated phi table in `minimize`
  static constexpr double eps = 1.0;           // plateau of eta in `trial`
  static constexpr int continuity_points = 200;
  static constexpr double mesh_h = 0.1;        // coarse 2-D mesh; the fine one is h/2
  static constexpr double r_trunc = 0;         // 0: max(8/sqrt(delta), 20)
  static constexpr double tube_width = 0;      // 0: square box
  static constexpr double domain_a = 4, domain_b = 2;
  static constexpr double domain_delta = 0.1;
  static constexpr std::uint64_t seed = 12345;
  static std::vector<double> trial_deltas() { return {0.04, 0.02, 0.01, 0.005, 0.0025}; }
  static std::vector<double> wedge_deltas() { return {0.1}; }
  static std::vector<double> domain_Bs() { return {50, 100, 200, 400}; }
};

struct RunConfig {
  std::string command;
  double b1 = Defaults::b1, b2 = Defaults::b2;
  std::vector<double> deltas;
  std::vector<double> Bs;
  int grid_n = Defaults::grid_n;
  double mesh_h = Defaults::mesh_h;
  double r_trunc = Defaults::r_trunc;
  double tube_width = Defaults::tube_width;
  std::string frame = "symmetric";
  double xi_min = Defaults::xi_min, xi_max = Defaults::xi_max;
  int xi_count = Defaults::xi_count;
  double eps = Defaults::eps;
  double domain_a = Defaults::domain_a, domain_b = Defaults::domain_b;
  double reference = 0;  // 0: compute lambda_b(delta) on the reference tube
  std::vector<int> only;
  std::string out;
  std::string format = "json";
  std::uint64_t seed = Defaults::seed;
  std::string config_path;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Config entries that the command actually reads, in a fixed order.
std::vector<std::pair<std::string, std::string>> echo(const RunConfig& c) {
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
    return s;
  };
  std::vector<std::pair<std::string, std::string>> e = {{"command", c.command}};
  const std::string& k = c.command;
  if (k != "verify") {
    e.push_back({"b1", num(c.b1)});
    e.push_back({"b2", num(c.b2)});
    e.push_back({"grid-n", std::to_string(c.grid_n)});
  }
  if (k == "band") {
    e.push_back({"xi-min", num(c.xi_min)});
    e.push_back({"xi-max", num(c.xi_max)});
    e.push_back({"xi-count", std::to_string(c.xi_count)});
  }
  if (k == "trial") {
    e.push_back({"delta", list(c.deltas)});
    e.push_back({"eps", num(c.eps)});
  }
  if (k == "wedge") {
    e.push_back({"delta", list(c.deltas)});
    e.push_back({"mesh-h", num(c.mesh_h)});
    e.push_back({"r-trunc", num(c.r_trunc)});
    e.push_back({"tube-width", num(c.tube_width)});
    e.push_back({"frame", c.frame});
  }
  if (k == "domain") {
    e.push_back({"delta", list(c.deltas)});
    e.push_back({"B", list(c.Bs)});
    e.push_back({"a", num(c.domain_a)});
    e.push_back({"b", num(c.domain_b)});
    e.push_back({"reference", num(c.reference)});
  }
  if (k == "verify") {
    std::string s;
    for (std::size_t i = 0; i < c.only.size(); ++i) s += (i ? " " : "") + std::to_string(c.only[i]);
    e.push_back({"only", s.empty() ? "all" : s});
  }
  e.push_back({"format", c.format});
  e.push_back({"seed", std::to_string(c.seed)});
  return e;
}

struct Check {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool pass = false;
};

// What a subcommand produces: scalar results, one table, checks.
struct Output {
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<std::pair<std::string, std::string>> labels;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Check> checks;
  json extra;  // structured results that only make sense in JSON
};

bool all_pass(const Output& o) {
  for (const auto& c : o.checks)
    if (!c.pass) return false;
  return true;
}

std::string render_json(const RunConfig& c, const Output& o) {
  json j;
  j["tool"] = "magstep";
  j["version"] = magstep::version;
  json cfg = json::object();
  for (auto& [k, v] : echo(c)) cfg[k] = v;
  j["config"] = cfg;
  json res = json::object();
  for (auto& [k, v] : o.labels) res[k] = v;
  for (auto& [k, v] : o.scalars) res[k] = v;
  if (!o.columns.empty()) {
    json t = json::array();
    for (const auto& r : o.rows) {
      json row = json::object();
      for (std::size_t i = 0; i < o.columns.size(); ++i) row[o.columns[i]] = r[i];
      t.push_back(row);
    }
    res["table"] = t;
  }
  for (auto& [k, v] : o.extra.items()) res[k] = v;
  j["results"] = res;
  json ch = json::array();
  for (const auto& k : o.checks)
    ch.push_back({{"name", k.name}, {"value", k.value}, {"tolerance", k.tolerance}, {"status", k.pass ? "PASS" : "FAIL"}});
  j["checks"] = ch;
  return j.dump(2) + "\n";
}

std::string render_csv(const RunConfig& c, const Output& o) {
  std::string s = "# magstep " + std::string(magstep::version) + "\n";
  for (auto& [k, v] : echo(c)) s += "# " + k + " = " + v + "\n";
  for (auto& [k, v] : o.labels) s += "# result " + k + " = " + v + "\n";
  for (auto& [k, v] : o.scalars) s += "# result " + k + " = " + num(v) + "\n";
  for (const auto& k : o.checks)
    s += "# check " + k.name + " = " + num(k.value) + " tol " + num(k.tolerance) + (k.pass ? " PASS" : " FAIL") + "\n";
  for (std::size_t i = 0; i < o.columns.size(); ++i) s += (i ? "," : "") + o.columns[i];
  if (!o.columns.empty()) s += "\n";
  for (const auto& r : o.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + num(r[i]);
    s += "\n";
  }
  return s;
}

void emit(const RunConfig& c, const Output& o) {
  std::string text = c.format == "csv" ? render_csv(c, o) : render_json(c, o);
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw InvalidInput("cannot open output file " + c.out);
  f << text;
}

StepField field_of(const RunConfig& c) { return classify(c.b1, c.b2); }

Grid1D grid_of(const RunConfig& c, const StepField& f) { return default_grid(f, c.grid_n); }

void add_field_labels(Output& o, const StepField& f) {
  o.labels.push_back({"field_case", to_string(f.kind)});
  o.scalars.push_back({"canonical_b1", f.b1});
  o.scalars.push_back({"canonical_b2", f.b2});
  o.scalars.push_back({"field_scale", f.scale});
}

// ---------------------------------------------------------------------------

Output cmd_band(const RunConfig& c) {
  if (c.xi_count < 2 || !(c.xi_max > c.xi_min)) throw InvalidInput("need xi-count >= 2 and xi-max > xi-min");
  StepField f = field_of(c);
  Grid1D g = grid_of(c, f);
  std::vector<double> xs(c.xi_count);
  for (int k = 0; k < c.xi_count; ++k) xs[k] = c.xi_min + (c.xi_max - c.xi_min) * k / (c.xi_count - 1);
  Output o;
  add_field_labels(o, f);
  o.columns = {"xi", "mu", "residual"};
  for (const auto& p : band_curve(f, xs, g)) o.rows.push_back({p.xi, p.mu, p.residual});
  return o;
}

Output cmd_minimize(const RunConfig& c) {
  StepField f = field_of(c);
  GroundState1D gs = minimize_band(f, grid_of(c, f));
  Output o;
  add_field_labels(o, f);
  o.scalars.push_back({"xi_b", gs.xi_b});
  o.scalars.push_back({"beta", gs.beta_b});
  o.scalars.push_back({"phi0", gs.phi0});
  o.scalars.push_back({"dphi0", gs.dphi0});
  o.scalars.push_back({"log_derivative_mismatch", gs.log_derivative_mismatch});
  o.scalars.push_back({"decay_rate", decay_rate(gs)});
  o.scalars.push_back({"norm2", l2_norm2(gs)});
  o.columns = {"t", "phi", "dphi"};
  int stride = std::max(1, (gs.grid.n - 1) / (Defaults::phi_rows - 1));
  for (int i = 0; i < gs.grid.n; i += stride) o.rows.push_back({gs.t(i), gs.phi[i], gs.dphi[i]});
  o.checks.push_back({"normalization", std::abs(l2_norm2(gs) - 1), 1e-8, std::abs(l2_norm2(gs) - 1) < 1e-8});
  return o;
}

Output cmd_moments(const RunConfig& c) {
  StepField f = field_of(c);
  if (!f.trapping()) throw InvalidInput(std::string("moments need a trapping field, got ") + to_string(f.kind));
  Grid1D g = grid_of(c, f);
  GroundState1D gs = minimize_band(f, g);
  Output o;
  add_field_labels(o, f);
  o.scalars.push_back({"xi_b", gs.xi_b});
  o.scalars.push_back({"beta", gs.beta_b});
  o.columns = {"n", "M", "quadrature_error"};
  std::vector<double> m(4);
  for (int n = 0; n <= 3; ++n) {
    MomentReport r = moment(gs, n);
    m[n] = r.value;
    o.rows.push_back({double(n), r.value, r.quadrature_error_estimate});
  }
  JBreakdown j = j_breakdown(gs);
  o.scalars.push_back({"J1", j.j1});
  o.scalars.push_back({"J2", j.j2});
  o.scalars.push_back({"J3", j.j3});
  o.scalars.push_back({"J", j.j_total});

  // the closed form is stated for (b, 1); the mirrored field carries M3 with a flipped sign
  bool mirrored = f.b2 != 1;
  GroundState1D canon = mirrored ? minimize_band(f.reflected(), default_grid(f.reflected(), c.grid_n)) : gs;
  double m3c = (mirrored ? -1 : 1) * m3_closed_form(canon);
  o.scalars.push_back({"M3_closed_form", m3c});

  auto check = [&](std::string name, double v, double tol) { o.checks.push_back({std::move(name), v, tol, v < tol}); };
  check("M1", std::abs(m[1]), 1e-7);
  check("M3 closed form", std::abs(m[3] - m3c), 1e-5);
  check("J1+J2", std::abs(j.j1 + j.j2), 1e-5);
  check("J+M3-xi^2 M1", std::abs(j.j_total - (-m[3] + gs.xi_b * gs.xi_b * m[1])), 1e-5);
  if (mirrored) {
    double w = 0;
    for (int n = 0; n <= 3; ++n) w = std::max(w, sign_flip_check(gs, canon, n));
    check("sign flip", w, 1e-6);
  }
  return o;
}

Output cmd_trial(const RunConfig& c) {
  StepField f = field_of(c);
  GroundState1D gs = minimize_band(f, grid_of(c, f));
  Output o;
  add_field_labels(o, f);
  o.scalars.push_back({"beta", gs.beta_b});
  double m3 = moment(gs, 3).value;
  o.scalars.push_back({"M3", m3});
  o.scalars.push_back({"predicted_coefficient", m3 * m3 / 4});
  o.columns = {"delta", "ell", "quotient", "gap", "gap_over_delta2", "energy", "norm2", "quadrature_diff"};
  double jump = 0;
  for (double d : c.deltas) {
    TrialState ts = make_trial(gs, d, c.eps);
    RayleighResult r = rayleigh(ts);
    double gap = gs.beta_b - r.quotient;
    o.rows.push_back({d, ts.geom.ell, r.quotient, gap, gap / (d * d), r.energy, r.norm2,
                      std::abs(r.energy - r.energy_coarse) / r.norm2});
    jump = std::max(jump, max_interface_jump(ts, Defaults::continuity_points, c.seed));
  }
  o.checks.push_back({"interface continuity", jump, 1e-8, jump < 1e-8});
  return o;
}

Output cmd_wedge(const RunConfig& c) {
  if (c.frame != "symmetric" && c.frame != "upright") throw InvalidInput("frame must be symmetric or upright");
  StepField f = field_of(c);
  double beta = minimize_band(f, grid_of(c, f)).beta_b;
  WedgeOptions wo;
  wo.h = c.mesh_h;
  wo.r_trunc = c.r_trunc;
  wo.tube_width = c.tube_width;
  wo.symmetric_frame = c.frame == "symmetric";
  Output o;
  add_field_labels(o, f);
  o.scalars.push_back({"beta", beta});
  o.columns = {"delta", "h", "r_trunc", "coarse", "fine", "extrapolated", "error_estimate", "gap",
               "second_fine", "residual", "symmetry_mismatch", "agmon_rate"};
  json diag = json::array();
  for (double d : c.deltas) {
    if (!(d >= 0 && d <= 0.3)) throw InvalidInput("each delta must lie in [0, 0.3]");
    GaugeField gf = make_gauge(f, d);
    EigenResult fine;
    LambdaRow r = lambda_at(gf, beta, wo, &fine);
    gf.tilt = wo.symmetric_frame ? d / 2 : 0;
    double sym = NAN, rate = NAN;
    json note = {{"delta", d}};
    try {
      sym = symmetry_check(fine, gf.reflection());
    } catch (const Error& e) {
      note["symmetry"] = e.what();
    }
    try {
      rate = agmon_fit(fine, beta, r.r_trunc).rate;
    } catch (const Error& e) {
      note["agmon"] = e.what();
    }
    if (note.size() > 1) diag.push_back(note);
    o.rows.push_back({r.delta, r.h, r.r_trunc, r.coarse, r.fine, r.extrapolated, r.error_estimate, r.gap,
                      r.second_fine, r.residual, sym, rate});
    bool certified = r.gap > 3 * r.error_estimate;
    o.checks.push_back({"bound state delta=" + num(d), r.gap, 3 * r.error_estimate, certified});
  }
  if (!diag.empty()) o.extra["diagnostics"] = diag;
  return o;
}

Output cmd_domain(const RunConfig& c) {
  if (c.deltas.size() != 1) throw InvalidInput("domain takes exactly one --delta");
  StepField f = field_of(c);
  double beta = minimize_band(f, grid_of(c, f)).beta_b;
  double ref = c.reference > 0 ? c.reference : acceptance::reference_lambda(f, c.deltas[0], beta);
  DomainSpec s;
  s.a = c.domain_a;
  s.b = c.domain_b;
  s.delta = c.deltas[0];
  s.b1 = f.b1;
  s.b2 = f.b2;
  DomainSweep sw = lambda1_sweep(s, c.Bs, ref);
  Output o;
  add_field_labels(o, f);
  o.scalars.push_back({"beta", beta});
  o.scalars.push_back({"reference_lambda", ref});
  o.columns = {"B", "h", "coarse", "fine", "lambda1", "lambda1_over_B", "error", "excess", "mass_radius"};
  for (const auto& r : sw.rows)
    o.rows.push_back({r.B, r.h, r.coarse, r.fine, r.lambda1, r.per_B, r.error, r.excess, r.mass_radius});
  o.checks.push_back({"errors decreasing", double(sw.errors_decreasing), 1, sw.errors_decreasing});
  o.checks.push_back({"lambda1 increasing (top half)", double(sw.increasing_top_half), 1, sw.increasing_top_half});
  o.checks.push_back({"approach from above", double(sw.from_above), 1, sw.from_above});
  return o;
}

Output cmd_verify(const RunConfig& c) {
  Output o;
  json list = json::array();
  o.columns = {"criterion", "pass"};
  for (const auto& crit : acceptance::criteria()) {
    if (!c.only.empty() && std::find(c.only.begin(), c.only.end(), crit.id) == c.only.end()) continue;
    auto r = acceptance::run(crit);
    // timings go to stderr only, to keep the file reproducible
    std::fprintf(stderr, "%s  criterion %d (%s)  %.1f s%s%s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                 r.seconds, r.message.empty() ? "" : "  -- ", r.message.c_str());
    json notes = json::object();
    for (const auto& n : r.notes) notes[n.key] = n.value;
    list.push_back({{"id", r.id}, {"name", r.name}, {"status", r.pass ? "PASS" : "FAIL"}, {"message", r.message},
                    {"notes", notes}});
    o.rows.push_back({double(r.id), r.pass ? 1.0 : 0.0});
    o.checks.push_back({"criterion " + std::to_string(r.id) + " " + r.name, r.pass ? 1.0 : 0.0, 1, r.pass});
  }
  if (list.empty()) throw InvalidInput("no criterion selected");
  o.extra["criteria"] = list;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic step fields: band functions, moments, trial states and 2-D eigenvalues"};
  app.set_version_flag("--version", std::string(magstep::version));
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; command-line flags override it");

  // options live on the top-level app so a config file can use plain keys;
  // subcommands fall through to them
  RunConfig c;
  app.add_option("--b1", c.b1, "field for t < 0")->capture_default_str();
  app.add_option("--b2", c.b2, "field for t > 0")->capture_default_str();
  app.add_option("--grid-n", c.grid_n, "1-D grid nodes (odd)")->capture_default_str();
  app.add_option("--delta", c.deltas, "wedge parameter (repeatable; trial, wedge, domain)");
  app.add_option("--B", c.Bs, "field strengths, ascending (repeatable; domain)");
  app.add_option("--mesh-h", c.mesh_h, "coarse 2-D mesh width; the fine mesh is half (wedge)")->capture_default_str();
  app.add_option("--r-trunc", c.r_trunc, "box half-width, 0 for max(8/sqrt(delta), 20) (wedge)")->capture_default_str();
  app.add_option("--tube-width", c.tube_width, "keep only nodes this close to the barrier, 0 for the box (wedge)")
      ->capture_default_str();
  app.add_option("--frame", c.frame, "symmetric (tilt delta/2) or upright: first arm on the x1 axis (wedge)")
      ->check(CLI::IsMember({"symmetric", "upright"}))
      ->capture_default_str();
  app.add_option("--xi-min", c.xi_min, "(band)")->capture_default_str();
  app.add_option("--xi-max", c.xi_max, "(band)")->capture_default_str();
  app.add_option("--xi-count", c.xi_count, "(band)")->capture_default_str();
  app.add_option("--eps", c.eps, "plateau length of eta (trial)")->capture_default_str();
  app.add_option("--a", c.domain_a, "ellipse semi-axis along x1 (domain)")->capture_default_str();
  app.add_option("--b", c.domain_b, "ellipse semi-axis along x2 (domain)")->capture_default_str();
  app.add_option("--reference", c.reference, "lambda_b(delta); 0 computes it on the reference tube (domain)")
      ->capture_default_str();
  app.add_option("--only", c.only, "criterion ids to run (repeatable; verify)");
  app.add_option("--out", c.out, "output file (stdout if empty)");
  app.add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--seed", c.seed, "seed for randomized checks")->capture_default_str();

  for (auto [name, help] : std::vector<std::pair<const char*, const char*>>{
           {"band", "band function mu(xi) on a grid of xi"},
           {"minimize", "band minimum xi_b, beta_b and the ground state"},
           {"moments", "moments M0..M3, J breakdown and identity residuals"},
           {"trial", "Rayleigh quotient of the trial state over delta"},
           {"wedge", "lowest eigenvalue on the truncated plane over delta, with diagnostics"},
           {"domain", "lambda_1(B) on an ellipse cut by the barrier"},
           {"verify", "acceptance suite, PASS/FAIL per criterion"}})
    app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (!app.get_config_ptr()->empty()) c.config_path = app.get_config_ptr()->as<std::string>();

  CLI::App* sub = app.get_subcommands().front();
  c.command = sub->get_name();
  if (c.deltas.empty()) {
    if (c.command == "trial") c.deltas = Defaults::trial_deltas();
    if (c.command == "wedge") c.deltas = Defaults::wedge_deltas();
    if (c.command == "domain") c.deltas = {Defaults::domain_delta};
  }
  if (c.Bs.empty()) c.Bs = Defaults::domain_Bs();

  try {
    Output o;
    if (c.command == "band") o = cmd_band(c);
    else if (c.command == "minimize") o = cmd_minimize(c);
    else if (c.command == "moments") o = cmd_moments(c);
    else if (c.command == "trial") o = cmd_trial(c);
    else if (c.command == "wedge") o = cmd_wedge(c);
    else if (c.command == "domain") o = cmd_domain(c);
    else o = cmd_verify(c);
    emit(c, o);
    return all_pass(o) ? 0 : 1;
  } catch (const Error& e) {
    int rc = e.solver_failure() ? 2 : 1;
    std::cerr << "magstep " << c.command << ": " << e.what() << "\n";
    json rec = {{"error", {{"kind", e.kind()}, {"message", e.what()}, {"command", c.command}, {"exit_code", rc}}}};
    std::cerr << rec.dump() << "\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "magstep " << c.command << ": " << e.what() << "\n";
    json rec = {{"error", {{"kind", "Internal"}, {"message", e.what()}, {"command", c.command}, {"exit_code", 2}}}};
    std::cerr << rec.dump() << "\n";
    return 2;
  }
}
