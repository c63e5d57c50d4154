// Command-line front end: one subcommand per operation, a strict JSON config, CSV/JSON/SVG
// outputs and a manifest per run.

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "membrana/continuation.hpp"
#include "membrana/oracles.hpp"
#include "membrana/regions.hpp"
#include "membrana/report.hpp"

using namespace membrana;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct Context {
  RunConfig cfg;
  Mesh mesh;
  std::filesystem::path out;
  int threads = 1;
  bool dump_matrix = false;
  std::vector<std::string> written;

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(out / name, content);
    written.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, json_text(j)); }
  /// Block reader for a command; store() records its resolved values for the manifest.
  ConfigBlock block(const std::string& name) const { return ConfigBlock(cfg.block(name), name); }
  void store(const std::string& name, const ConfigBlock& b) {
    b.finish();
    cfg.resolved[name] = b.resolved();
  }
};

Region parse_region(const std::string& s) {
  if (s == "omega1") return Region::Omega1;
  if (s == "omega2") return Region::Omega2;
  return Region::Omega;
}

BoundarySpec parse_bc(const Context& ctx, Region r, const std::string& s) {
  if (s == "neumann") return BoundarySpec::neumann(r);
  if (r == Region::Omega) throw ValidationError("config: bc '" + s + "' needs region omega1 or omega2");
  if (s == "robin") return BoundarySpec::robin_on_interface(ctx.mesh.geometry(), r);
  return BoundarySpec::dirichlet_on_interface(r, 0.0);
}

/// Region label of an Omega node: its subdomain, or "interface" at a and b.
std::string omega_node_label(const Mesh& mesh, std::size_t j) {
  if (j == mesh.omega_node_a() || j == mesh.omega_node_b()) return "interface";
  return to_string(mesh.omega_node_region(j));
}

/// One row per Omega node: x, region, u1, u2, v. u1 and u2 are extended by zero outside
/// their subdomain; both are present at the interface nodes.
std::string state_csv(const Mesh& mesh, const Vector& u1, const Vector& u2, const Vector& v) {
  const auto x = mesh.coords(Region::Omega);
  std::vector<double> e1(x.size(), 0.0), e2(x.size(), 0.0);
  const auto i1 = mesh.omega_index(Region::Omega1);
  const auto i2 = mesh.omega_index(Region::Omega2);
  for (std::size_t k = 0; k < i1.size(); ++k) e1[i1[k]] = u1[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < i2.size(); ++k) e2[i2[k]] = u2[static_cast<Eigen::Index>(k)];
  CsvTable t({"x", "region", "u1", "u2", "v"});
  for (std::size_t j = 0; j < x.size(); ++j) {
    t.add({x[j], omega_node_label(mesh, j), e1[j], e2[j], v[static_cast<Eigen::Index>(j)]});
  }
  return t.str();
}

Json field_summary(const Vector& f) {
  if (f.size() == 0) return Json{{"min", nullptr}, {"max", nullptr}};
  return Json{{"min", f.minCoeff()}, {"max", f.maxCoeff()}};
}

Json state_summary(const StateTriple& s) {
  return Json{{"u1", field_summary(s.u1)}, {"u2", field_summary(s.u2)}, {"v", field_summary(s.v)}};
}

/// Operator shared by `eig` and the dense `oracle`: either the membrane pair with constant
/// potentials c1, c2 or a scalar operator on one region.
struct OperatorChoice {
  bool interface = true;
  Region region = Region::Omega;
  BoundarySpec bc;
  double c = 0.0, c1 = 0.0, c2 = 0.0, d = 1.0;

  SparseOperator assemble(const Mesh& mesh) const {
    if (interface) {
      return assemble_interface(mesh, d, CoefficientField::constant(mesh, Region::Omega1, c1),
                                CoefficientField::constant(mesh, Region::Omega2, c2));
    }
    return assemble_scalar(mesh, region, d, CoefficientField::constant(mesh, region, c), bc);
  }
};

OperatorChoice read_operator(const Context& ctx, ConfigBlock& b) {
  OperatorChoice op;
  op.interface = b.choice("operator", "interface", {"interface", "scalar"}) == "interface";
  op.region = parse_region(b.choice("region", "omega", {"omega", "omega1", "omega2"}));
  op.bc = parse_bc(ctx, op.region, b.choice("bc", "neumann", {"neumann", "robin", "dirichlet"}));
  op.c = b.number("c", 0.0);
  op.c1 = b.number("c1", 0.0);
  op.c2 = b.number("c2", 0.0);
  op.d = b.positive("d", ctx.cfg.params.d);
  return op;
}

void cmd_eig(Context& ctx) {
  auto b = ctx.block("eig");
  const auto op = read_operator(ctx, b);
  const bool with_vector = b.boolean("eigenfunction", true);
  ctx.store("eig", b);

  const Mesh& m = ctx.mesh;
  EigenResult r;
  CsvTable t({"x", "region", "phi"});
  if (op.interface) {
    r = lambda1(m, op.d, CoefficientField::constant(m, Region::Omega1, op.c1),
                CoefficientField::constant(m, Region::Omega2, op.c2));
    const auto x1 = m.coords(Region::Omega1), x2 = m.coords(Region::Omega2);
    for (std::size_t k = 0; k < x1.size(); ++k) t.add({x1[k], std::string("omega1"), r.eigenfunction[static_cast<Eigen::Index>(k)]});
    for (std::size_t k = 0; k < x2.size(); ++k) {
      t.add({x2[k], std::string("omega2"), r.eigenfunction[static_cast<Eigen::Index>(x1.size() + k)]});
    }
  } else {
    r = sigma1(m, op.region, op.d, CoefficientField::constant(m, op.region, op.c), op.bc);
    const auto x = m.coords(op.region);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const std::string label = op.region == Region::Omega ? omega_node_label(m, k) : to_string(op.region);
      t.add({x[k], label, r.eigenfunction[static_cast<Eigen::Index>(k)]});
    }
  }
  ctx.write_json("eig.json", Json{{"value", r.value}, {"residual", r.residual}, {"iterations", r.iterations}});
  if (with_vector) ctx.write("eigenfunction.csv", t.str());
  if (ctx.dump_matrix) ctx.write("matrix.txt", matrix_text(op.assemble(m).matrix));
}

void cmd_logistic(Context& ctx) {
  auto b = ctx.block("logistic");
  const Region region = parse_region(b.choice("region", "omega", {"omega", "omega1", "omega2"}));
  const BoundarySpec bc = parse_bc(ctx, region, b.choice("bc", "neumann", {"neumann", "robin", "dirichlet"}));
  const double rate = b.number("rate", ctx.cfg.params.mu);
  const double c = b.number("c", 0.0);
  ctx.store("logistic", b);

  const Mesh& m = ctx.mesh;
  const auto p = ctx.cfg.params;
  const auto r = solve_logistic_scalar(m, region, rate, CoefficientField::constant(m, region, c), p.beta, bc, p.d);
  ctx.write_json("logistic.json", Json{{"status", to_string(r.status)},
                                       {"threshold", r.threshold},
                                       {"residual", r.residual},
                                       {"iterations", r.iterations},
                                       {"u", field_summary(r.field)}});
  if (r.status == Existence::Positive) {
    CsvTable t({"x", "region", "u"});
    const auto x = m.coords(region);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const std::string label = region == Region::Omega ? omega_node_label(m, k) : to_string(region);
      t.add({x[k], label, r.field[static_cast<Eigen::Index>(k)]});
    }
    ctx.write("logistic.csv", t.str());
  }
}

void cmd_semitrivial(Context& ctx) {
  auto b = ctx.block("semitrivial");
  const double l1 = b.number("lambda1", ctx.cfg.params.lambda1);
  const double l2 = b.number("lambda2", ctx.cfg.params.lambda2);
  ctx.store("semitrivial", b);

  const auto p = ctx.cfg.params;
  const auto r = solve_membrane_logistic(ctx.mesh, l1, l2, p.alpha1, p.alpha2, p.d);
  ctx.write_json("semitrivial.json", Json{{"status", to_string(r.status)},
                                          {"lambda1_value", r.lambda1_value},
                                          {"residual", r.residual},
                                          {"iterations", r.iterations},
                                          {"theta1", field_summary(r.pair.theta1)},
                                          {"theta2", field_summary(r.pair.theta2)}});
  if (r.status == Existence::Positive) {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(ctx.mesh.size(Region::Omega)));
    ctx.write("semitrivial.csv", state_csv(ctx.mesh, r.pair.theta1, r.pair.theta2, zero));
  }
}

void cmd_coexist(Context& ctx) {
  auto b = ctx.block("coexist");
  CoexistenceOptions o;
  o.max_iterations = b.integer("max_iterations", o.max_iterations, 1);
  o.residual_tol = b.positive("residual_tol", o.residual_tol);
  o.delta = b.positive("delta", o.delta);
  o.fallbacks = b.boolean("fallbacks", o.fallbacks);
  ctx.store("coexist", b);

  const auto& p = ctx.cfg.params;
  const auto r = solve_coexistence(ctx.mesh, p, std::nullopt, o);
  Json j{{"found", r.found}, {"note", r.note}, {"residual", r.residual}, {"iterations", r.iterations}};
  if (r.found) {
    j["state"] = state_summary(r.state);
    j["coexistence"] = r.state.coexistence();
    ctx.write("coexist.csv", state_csv(ctx.mesh, r.state.u1, r.state.u2, r.state.v));
    if (ctx.dump_matrix) ctx.write("jacobian.txt", matrix_text(coexistence_jacobian(ctx.mesh, p, r.state)));
  }
  ctx.write_json("coexist.json", j);
}

void cmd_evolve(Context& ctx) {
  auto b = ctx.block("evolve");
  const double t_end = b.positive("t_end", 50.0);
  const double dt = b.positive("dt", 0.01);
  const auto init = b.numbers("init", {1.0, 1.0, 1.0});
  EvolveOptions eo;
  eo.steady_tol = b.number("steady_tol", 0.0);
  ctx.store("evolve", b);
  if (init.size() != 3) throw ValidationError("config: 'evolve.init' must list constant u1, u2, v");
  for (double v : init) {
    if (v < 0.0) throw ValidationError("config: 'evolve.init' entries must be non-negative");
  }

  const Mesh& m = ctx.mesh;
  StateTriple s;
  s.u1 = Vector::Constant(static_cast<Eigen::Index>(m.size(Region::Omega1)), init[0]);
  s.u2 = Vector::Constant(static_cast<Eigen::Index>(m.size(Region::Omega2)), init[1]);
  s.v = Vector::Constant(static_cast<Eigen::Index>(m.size(Region::Omega)), init[2]);
  const auto r = evolve_parabolic(m, ctx.cfg.params, s, t_end, dt, eo);
  auto final_state = r.state;
  final_state.classify();
  ctx.write_json("evolve.json", Json{{"t", r.t},
                                     {"steps", r.steps},
                                     {"reached_steady", r.reached_steady},
                                     {"coexistence", final_state.coexistence()},
                                     {"state", state_summary(r.state)}});
  ctx.write("evolve.csv", state_csv(m, r.state.u1, r.state.u2, r.state.v));
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return v;
}

void check_range(double lo, double hi, const std::string& what) {
  if (!(lo < hi)) throw ValidationError("config: '" + what + "' range is empty");
}

void cmd_curve_h(Context& ctx) {
  auto b = ctx.block("curve_h");
  const double lo = b.number("nu2_min", -20.0);
  const double hi = b.number("nu2_max", 4.0);
  const int n = b.integer("samples", 101, 2);
  ctx.store("curve_h", b);
  check_range(lo, hi, "curve_h.nu2");

  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  CsvTable t({"nu2", "H", "flag"});
  for (double nu2 : linspace(lo, hi, n)) {
    const auto s = e.curve_H(nu2);
    t.add({nu2, s.value, to_string(s.flag)});
  }
  ctx.write("curve_h.csv", t.str());
  ctx.write_json("curve_h.json", Json{{"sigma1", e.sigma1()},
                                      {"sigma2", e.sigma2()},
                                      {"slope_at_zero", e.curve_H_slope_at_zero()},
                                      {"slope_formula", e.curve_H_slope_formula()}});
}

void cmd_curve_g(Context& ctx) {
  auto b = ctx.block("curve_g");
  const bool equal = b.choice("mode", "general", {"general", "equal"}) == "equal";
  const double l2 = b.number("lambda2", ctx.cfg.params.lambda2);
  const double lo = b.number("x_min", equal ? 0.1 : -10.0);
  const double hi = b.number("x_max", 20.0);
  const int n = b.integer("samples", 101, 2);
  ctx.store("curve_g", b);
  check_range(lo, hi, "curve_g.x");

  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  CsvTable t({equal ? "lambda" : "lambda1", "g", "flag"});
  for (double x : linspace(lo, hi, n)) {
    const auto s = equal ? e.curve_g_equal(x) : e.curve_g(x, l2);
    t.add({x, s.value, to_string(s.flag)});
  }
  ctx.write("curve_g.csv", t.str());
}

void cmd_curve_ghat(Context& ctx) {
  auto b = ctx.block("curve_ghat");
  const double lo = b.number("mu_min", 0.0);
  const double hi = b.number("mu_max", 20.0);
  const int n = b.integer("samples", 101, 2);
  ctx.store("curve_ghat", b);
  check_range(lo, hi, "curve_ghat.mu");
  if (lo < 0.0) throw ValidationError("config: 'curve_ghat.mu_min' must be non-negative");

  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  CsvTable t({"mu", "sigma0", "Ghat", "consistency", "flag"});
  for (double mu : linspace(lo, hi, n)) {
    const auto s = e.curve_sigma0_and_Ghat(mu);
    t.add({mu, s.sigma0, s.ghat, s.consistency, to_string(s.flag)});
  }
  ctx.write("curve_ghat.csv", t.str());
}

void cmd_mu0(Context& ctx) {
  auto b = ctx.block("mu0");
  const double l1 = b.number("lambda1", ctx.cfg.params.lambda1);
  const double l2 = b.number("lambda2", ctx.cfg.params.lambda2);
  ctx.store("mu0", b);
  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  const double mu0 = e.compute_mu0(l1, l2);
  ctx.write_json("mu0.json", Json{{"lambda1", l1}, {"lambda2", l2}, {"mu0", mu0}});
}

void cmd_mu1(Context& ctx) {
  auto b = ctx.block("mu1");
  const double l1 = b.number("lambda1", ctx.cfg.params.lambda1);
  const double l2 = b.number("lambda2", ctx.cfg.params.lambda2);
  ctx.store("mu1", b);
  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  const auto mu1 = e.compute_mu1(l1, l2);
  Json j{{"lambda1", l1}, {"lambda2", l2}};
  j["mu1"] = mu1 ? Json(*mu1) : Json(nullptr);
  ctx.write_json("mu1.json", j);
}

void cmd_mu_star(Context& ctx) {
  auto b = ctx.block("mu_star");
  const bool equal = b.choice("mode", "general", {"general", "equal"}) == "equal";
  const auto& p = ctx.cfg.params;
  const double l1 = b.number("lambda1", p.lambda1);
  const double l2 = b.number("lambda2", p.lambda2);
  const double mu = b.number("mu", p.mu);
  BracketOptions o;
  o.rel_tol = b.positive("rel_tol", o.rel_tol);
  o.max_bisections = b.integer("max_bisections", o.max_bisections, 1);
  o.refutation.t_end = b.positive("t_end", o.refutation.t_end);
  o.refutation.extinction = b.positive("extinction", o.refutation.extinction);
  if (const auto w = b.optional_numbers("window")) {
    if (w->size() != 2) throw ValidationError("config: 'mu_star.window' must have two entries");
    o.window_lo = (*w)[0];
    o.window_hi = (*w)[1];
  }
  ctx.store("mu_star", b);

  const CurveEngine e(ctx.mesh, p);
  const Bracket br = equal ? estimate_lambda_star(e, mu, o) : estimate_mu_star(e, l1, l2, o);
  ctx.write_json("mu_star.json", Json{{"quantity", equal ? "lambda_star" : "mu_star"},
                                      {"lower", br.lower},
                                      {"upper", br.upper},
                                      {"constructive", br.constructive},
                                      {"upper_refuted", br.upper_refuted},
                                      {"evaluations", br.evaluations},
                                      {"note", br.note}});
}

void cmd_region_map(Context& ctx) {
  auto b = ctx.block("region_map");
  const bool equal = b.choice("mode", "general", {"general", "equal"}) == "equal";
  const double l2 = b.number("lambda2", ctx.cfg.params.lambda2);
  GridSpec g;
  g.x_min = b.number("x_min", equal ? 0.0 : -10.0);
  g.x_max = b.number("x_max", 20.0);
  g.nx = b.integer("nx", 60, 2);
  g.mu_min = b.number("mu_min", -1.0);
  g.mu_max = b.number("mu_max", 20.0);
  g.nmu = b.integer("nmu", 60, 2);
  RegionMapOptions o;
  o.confirm = b.boolean("confirm", true);
  o.band = b.integer("band", o.band, 0);
  o.use_large_bound = b.boolean("use_large_bound", o.use_large_bound);
  const int curve_samples = b.integer("curve_samples", 200, 2);
  ctx.store("region_map", b);
  g.validate();
  o.threads = ctx.threads;

  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  const auto map = region_map(e, equal ? RegionMode::EqualLambda : RegionMode::General, l2, g, o);

  CsvTable t({equal ? "lambda" : "lambda1", "mu", "class", "confirmed"});
  std::map<std::string, int> classes, confirmations;
  for (const auto& c : map.cells) {
    t.add({c.x, c.mu, to_string(c.cls), to_string(c.confirmation)});
    ++classes[to_string(c.cls)];
    ++confirmations[to_string(c.confirmation)];
  }
  ctx.write("region_map.csv", t.str());

  // Curve overlays: mu = g(x) and x = G(mu) (or Ghat(mu) for equal rates).
  CurveSeries gs{"g", "#2b83ba", {}, false};
  for (double x : linspace(g.x_min, g.x_max, curve_samples)) {
    const auto s = equal ? e.curve_g_equal(x) : e.curve_g(x, l2);
    gs.points.emplace_back(x, s.flag == CurveFlag::OK ? s.value : std::nan(""));
  }
  CurveSeries gg{equal ? "Ghat" : "G", "#7b3294", {}, true};
  std::vector<PlotMarker> markers;
  for (double mu : linspace(std::max(g.mu_min, 0.0), g.mu_max, curve_samples)) {
    double x = std::nan("");
    if (equal) {
      const auto s = e.curve_sigma0_and_Ghat(mu);
      if (s.flag == CurveFlag::OK) x = s.ghat;
    } else {
      const auto s = e.curve_G(mu, l2);
      if (s.flag == CurveFlag::OK) x = s.value;
    }
    gg.points.emplace_back(x, mu);
  }
  Json summary{{"sigma1", e.sigma1()}, {"sigma2", e.sigma2()}, {"classes", classes}, {"confirmation", confirmations}};
  if (!equal && l2 < e.sigma2()) {
    const auto h = e.curve_H(l2);
    if (h.flag == CurveFlag::OK) {
      markers.push_back({"G(0) = H(\xCE\xBB\xE2\x82\x82)", h.value, 0.0});
      summary["H_lambda2"] = h.value;
    }
  }
  char title[128];
  if (equal) {
    std::snprintf(title, sizeof title, "equal growth rates");
  } else {
    std::snprintf(title, sizeof title, "\xCE\xBB\xE2\x82\x82 = %.6g", l2);
  }
  ctx.write("region_map.svg", render_region_svg(map, {gs, gg}, markers, title));
  ctx.write_json("region_map.json", summary);
}

void cmd_branch(Context& ctx) {
  auto b = ctx.block("branch");
  const double l1 = b.number("lambda1", ctx.cfg.params.lambda1);
  const double l2 = b.number("lambda2", ctx.cfg.params.lambda2);
  StepSpec s;
  s.delta_mu = b.positive("delta_mu", s.delta_mu);
  s.initial_step = b.positive("initial_step", s.initial_step);
  s.max_step = b.positive("max_step", s.max_step);
  s.min_step = b.positive("min_step", s.min_step);
  s.max_points = b.integer("max_points", s.max_points, 2);
  s.residual_tol = b.positive("residual_tol", s.residual_tol);
  s.delta = b.positive("delta", s.delta);
  ctx.store("branch", b);
  s.validate();

  const CurveEngine e(ctx.mesh, ctx.cfg.params);
  const auto br = trace_branch(e, l1, l2, s);
  CsvTable t({"mu", "arclength", "min_u1", "min_u2", "min_v", "residual"});
  for (const auto& pt : br.points) {
    t.add({pt.mu, pt.arclength, pt.state.min_u1(), pt.state.min_u2(), pt.state.min_v(), pt.residual});
  }
  ctx.write("branch.csv", t.str());
  ctx.write_json("branch.json", Json{{"mu0", br.mu0},
                                     {"mu1", br.mu1},
                                     {"mu_star_bound", br.mu_star_bound},
                                     {"points", br.points.size()},
                                     {"end", to_string(br.end)},
                                     {"note", br.note}});
}

void cmd_limit_system(Context& ctx) {
  auto b = ctx.block("limit_system");
  ModelParams p = ctx.cfg.params;
  p.lambda2 = b.number("lambda2", p.lambda2);
  p.mu = b.number("mu", p.mu);
  const double m = b.positive("M", 1e6);
  const auto l1 = b.numbers("lambda1", {50.0, 200.0, 1000.0});
  const double factor = b.number("factor", 1.1);
  ctx.store("limit_system", b);

  const auto st = limit_approach(ctx.mesh, p, m, l1, factor);
  CsvTable prof({"x", "u2", "v"});
  const auto x2 = ctx.mesh.coords(Region::Omega2);
  for (std::size_t k = 0; k < x2.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    prof.add({x2[k], st.limit.u2[i], st.limit.v[i]});
  }
  ctx.write("limit_system.csv", prof.str());
  CsvTable t({"lambda1", "min_u1", "dist_v_omega2", "sup_v_omega1", "residual"});
  for (const auto& pt : st.points) t.add({pt.lambda1, pt.min_u1, pt.dist_v_omega2, pt.sup_v_omega1, pt.residual});
  ctx.write("limit_approach.csv", t.str());
  ctx.write_json("limit_system.json", Json{{"v_positive", st.limit.v_positive},
                                           {"residual", st.limit.residual},
                                           {"iterations", st.limit.iterations},
                                           {"u2", field_summary(st.limit.u2)},
                                           {"v", field_summary(st.limit.v)}});
}

oracles::IntervalEnd read_end(ConfigBlock& b, const std::string& side) {
  const auto kind = b.choice(side, "neumann", {"neumann", "robin", "dirichlet"});
  const double gamma = b.number(side + "_gamma", 0.0);
  if (kind == "robin") return oracles::IntervalEnd::robin(gamma);
  if (kind == "dirichlet") return oracles::IntervalEnd::dirichlet();
  return oracles::IntervalEnd::neumann();
}

void cmd_oracle(Context& ctx) {
  auto b = ctx.block("oracle");
  const bool dense = b.choice("kind", "interval", {"interval", "dense"}) == "dense";
  Json j{{"kind", dense ? "dense" : "interval"}};
  if (dense) {
    const auto op = read_operator(ctx, b);
    ctx.store("oracle", b);
    const auto a = op.assemble(ctx.mesh);
    j["value"] = oracles::dense_eigen_oracle(a, ctx.cfg.seed);
    if (ctx.dump_matrix) ctx.write("matrix.txt", matrix_text(a.matrix));
  } else {
    oracles::TranscendentalSpec spec;
    spec.length = b.positive("length", 1.0);
    spec.left = read_end(b, "left");
    spec.right = read_end(b, "right");
    ctx.store("oracle", b);
    j["value"] = oracles::interval_eigen_oracle(spec);
  }
  ctx.write_json("oracle.json", j);
}

struct Command {
  std::function<void(Context&)> run;
  std::string help;
};

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"eig", {cmd_eig, "principal eigenpair of a scalar or interface operator"}},
      {"logistic", {cmd_logistic, "scalar logistic problem on one region"}},
      {"semitrivial", {cmd_semitrivial, "membrane logistic pair (theta1, theta2)"}},
      {"coexist", {cmd_coexist, "coexistence state by Newton"}},
      {"evolve", {cmd_evolve, "parabolic time stepping to t_end"}},
      {"curve-h", {cmd_curve_h, "the curve H(nu2) and its slope at 0"}},
      {"curve-g", {cmd_curve_g, "g(lambda1), or g(lambda) with equal rates"}},
      {"curve-ghat", {cmd_curve_ghat, "sigma0(mu) and Ghat(mu) for equal rates"}},
      {"mu0", {cmd_mu0, "bifurcation value from the semitrivial pair"}},
      {"mu1", {cmd_mu1, "bifurcation value from (0, 0, mu)"}},
      {"mu-star", {cmd_mu_star, "empirical and constructive non-existence thresholds"}},
      {"region-map", {cmd_region_map, "classified and confirmed parameter map with SVG"}},
      {"branch", {cmd_branch, "continuation of the coexistence branch from mu0"}},
      {"limit-system", {cmd_limit_system, "limit system as lambda1 grows and the approach to it"}},
      {"oracle", {cmd_oracle, "reference eigenvalue (transcendental or dense)"}},
  };
  return table;
}

int resolve_threads(std::optional<int> flag) {
  int n = 0;
  if (flag) {
    n = *flag;
  } else if (const char* env = std::getenv("MEMBRANA_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("MEMBRANA_THREADS is not an integer: ") + env);
    }
  } else {
    n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  if (n < 1) throw ValidationError("thread count must be at least 1");
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"membrana: steady states, thresholds and region maps for a membrane competition model"};
  std::string config_path;
  std::string out_dir;
  std::optional<int> threads;
  bool dump_matrix = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads (fallback: MEMBRANA_THREADS)");
  app.add_flag("--dump-matrix", dump_matrix, "also write the assembled matrix as 'row col value' lines");
  app.require_subcommand(1, 1);
  std::string chosen;
  for (const auto& [name, cmd] : commands()) {
    auto* sub = app.add_subcommand(name, cmd.help);
    sub->fallthrough();
    sub->callback([&chosen, name = name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  std::optional<Context> ctx;
  auto finish_manifest = [&](const std::string& status, const std::string& error) {
    if (!ctx) return;
    try {
      Json cfg = ctx->cfg.resolved;
      cfg["status"] = status;
      if (!error.empty()) cfg["error"] = error;
      write_manifest(ctx->out, chosen, cfg, ctx->threads, ctx->written);
    } catch (const std::exception& e) {
      std::cerr << "membrana: cannot write manifest: " << e.what() << "\n";
    }
  };
  try {
    RunConfig cfg = load_config(config_path);
    const int n_threads = resolve_threads(threads);
    Mesh mesh = build_mesh(cfg.geometry, cfg.n_per_unit);
    const std::filesystem::path out = std::filesystem::path(out_dir.empty() ? cfg.output : out_dir);
    if (!out_dir.empty()) cfg.resolved["output"] = out_dir;
    ctx.emplace(Context{std::move(cfg), std::move(mesh), out, n_threads, dump_matrix, {}});
    commands().at(chosen).run(*ctx);
    finish_manifest("ok", "");
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "membrana: invalid input: " << e.what() << "\n";
    finish_manifest("validation_error", e.what());
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "membrana: outside the domain of definition: " << e.what() << "\n";
    finish_manifest("validation_error", e.what());
    return kExitValidation;
  } catch (const SolverError& e) {
    std::cerr << "membrana: solver failure: " << e.what() << "\n";
    finish_manifest("solver_failure", e.what());
    return kExitSolver;
  } catch (const EigenError& e) {
    std::cerr << "membrana: eigen solver failure: " << e.what() << "\n";
    finish_manifest("solver_failure", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "membrana: error: " << e.what() << "\n";
    finish_manifest("error", e.what());
    return 1;
  }
}
