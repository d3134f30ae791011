#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "canard/errors.hpp"
#include "canard/integrate.hpp"
#include "canard/parallel.hpp"
#include "config.hpp"
#include "svg.hpp"

using nlohmann::json;
using namespace canard;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vec(const Vec2& v) { return {v[0], v[1]}; }
json vec(const Vec3& v) { return {v[0], v[1], v[2]}; }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  cli::RunConfig cfg;
  bool want_json_errors = false;

  std::string path(const std::string& name) const { return (std::filesystem::path(cfg.out_dir) / name).string(); }

  std::ofstream open(const std::string& name) const {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(path(name));
    if (!out) throw ConfigError("cannot write '" + path(name) + "'");
    return out;
  }

  void emit(const std::string& name, json result) const {
    result["config"] = cli::to_json(cfg);
    const std::string text = result.dump(2) + "\n";
    open(name) << text;
    std::cout << text;
  }
};

json geometry_json(const ReducedGeometry& g) {
  json inter = json::array();
  for (const auto& i : g.intersections)
    inter.push_back({{"tau", i.tau}, {"sigma", i.sigma}, {"point", vec(i.point)}, {"A", i.A}});
  return {{"T_a", g.T_a},
          {"T_r", g.T_r},
          {"T_a_clamped", g.T_a_clamped},
          {"T_r_clamped", g.T_r_clamped},
          {"tau", g.tau},
          {"sigma", g.sigma},
          {"x_star", g.x_star},
          {"y_star", g.y_star},
          {"A", g.A},
          {"selected", g.selected},
          {"intersections", inter}};
}

json map_json(const CanardMap& m) {
  const MapParams& p = m.params();
  return {{"eps", p.eps},
          {"alpha", p.alpha},
          {"rho", p.rho},
          {"rho_lag", p.rho_lag},
          {"delta", p.delta},
          {"M_est", p.M_est},
          {"rho_below_alpha_bound", p.rho_below_alpha_bound},
          {"rho_below_delta_bound", p.rho_below_delta_bound}};
}

json degree_json(const DegreeReport& r) {
  json bridges = json::array();
  for (const auto& b : r.bridges)
    bridges.push_back({{"side", b.side},
                       {"lo", {b.lo.u, b.lo.v}},
                       {"hi", {b.hi.u, b.hi.v}},
                       {"samples", b.samples},
                       {"shoot_evals", b.shoot_evals}});
  return {{"degree", r.degree},
          {"winding_uv", r.winding_uv},
          {"orientation", r.orientation},
          {"total_angle", r.total_angle},
          {"n_evals", r.n_evals},
          {"shoot_evals", r.shoot_evals},
          {"min_field_magnitude", r.min_field_magnitude},
          {"max_increment", r.max_increment},
          {"certified", r.certified},
          {"rect", {r.rect.u0, r.rect.u1, r.rect.v0, r.rect.v1}},
          {"bridges", bridges}};
}

json canard_json(const CanardResult& r) {
  const Adherence& a = r.adherence;
  json j = {{"fixed_point", vec(r.fixed_point)},
            {"uv", {r.uv.u, r.uv.v}},
            {"inside", r.inside},
            {"s", r.s},
            {"period", r.period},
            {"limit", r.limit},
            {"deviation", r.deviation},
            {"closure_error", r.closure_error},
            {"residual", r.residual},
            {"forward_drift", nullable(r.forward_drift)},
            {"forward_s", nullable(r.forward_s)},
            {"tilde_t", r.tilde},
            {"t_match", nullable(r.t_match)},
            {"case", to_string(r.case_tag)},
            {"method", r.method},
            {"iterations", r.iterations},
            {"evals", r.evals},
            {"orbit_samples", r.orbit.size()},
            {"adherence",
             {{"layer", a.layer},
              {"bound", a.bound},
              {"attractive_window", {a.attr_from, a.attr_to}},
              {"repulsive_window", {a.repul_from, a.repul_to}},
              {"attractive_samples", a.attr_samples},
              {"repulsive_samples", a.repul_samples},
              {"max_z_minus_x", a.max_attr},
              {"max_z_plus_x", a.max_repul},
              {"ok", a.ok}}}};
  if (r.degree) j["degree"] = degree_json(*r.degree);
  return j;
}

std::shared_ptr<const ReducedGeometry> geometry(const cli::RunConfig& c, const SystemSpec& sys) {
  return std::make_shared<const ReducedGeometry>(compute_geometry(sys, c.geometry_options()));
}

cli::Series curve(const std::vector<PolyPoint>& pts, double t_lo, double t_hi, int comp_x, int comp_y, int z_sign,
                  const char* color, bool dashed, const char* label) {
  cli::Series s;
  s.color = color;
  s.dashed = dashed;
  s.label = label;
  for (const auto& q : pts) {
    if (q.t < t_lo || q.t > t_hi) continue;
    const Vec3 p{q.p[0], q.p[1], z_sign * q.p[0]};
    s.x.push_back(p[comp_x]);
    s.y.push_back(p[comp_y]);
  }
  return s;
}

// ---- subcommands ----

int run_check(const Context& ctx) {
  const SystemSpec sys = ctx.cfg.system();
  const AssumptionReport r = check_assumptions(sys, ctx.cfg.box, ctx.cfg.check_samples, ctx.cfg.seed);
  json j = {{"f_origin", r.f_origin},
            {"g_origin", r.g_origin},
            {"sign_condition_ok", r.sign_condition_ok},
            {"M_est", r.M_est},
            {"lambda_est", r.lambda_est},
            {"pass", r.pass}};
  try {
    const auto g = geometry(ctx.cfg, sys);
    j["geometry"] = geometry_json(*g);
    j["intersection_ok"] = true;
  } catch (const DomainError& e) {
    j["intersection_ok"] = false;
    j["intersection_error"] = std::string(e.kind()) + ": " + e.what();
  }
  ctx.emit("check.json", j);
  return r.pass && j["intersection_ok"].get<bool>() ? 0 : 1;
}

int run_reduced(const Context& ctx) {
  const SystemSpec sys = ctx.cfg.system();
  const auto g = geometry(ctx.cfg, sys);
  if (ctx.cfg.csv) {
    for (const auto& [name, pts] : {std::pair{"gamma_a.csv", &g->gamma_a}, std::pair{"gamma_r.csv", &g->gamma_r}}) {
      auto out = ctx.open(name);
      out << "t,x,y\n";
      for (const auto& q : *pts) out << g17(q.t) << "," << g17(q.p[0]) << "," << g17(q.p[1]) << "\n";
    }
  }
  if (ctx.cfg.svg) {
    cli::Panel p{"reduced curves", "x", "y", {}};
    p.series.push_back(curve(g->gamma_a, g->T_a, 0.0, 0, 1, 1, "black", false, "attractive"));
    p.series.push_back(curve(g->gamma_r, 0.0, g->T_r, 0, 1, -1, "black", true, "repulsive"));
    cli::Series star;
    star.x = {g->x_star};
    star.y = {g->y_star};
    star.markers = true;
    star.color = "crimson";
    p.series.push_back(star);
    cli::write_svg(ctx.path("reduced.svg"), {p});
  }
  ctx.emit("geometry.json", geometry_json(*g));
  return 0;
}

int run_map(const Context& ctx, int grid, int boundary) {
  const SystemSpec sys = ctx.cfg.system();
  const CanardMap W(sys, geometry(ctx.cfg, sys), ctx.cfg.map_params());
  std::vector<ChartPoint> pts;
  const double h = 0.5 * W.alpha();
  if (boundary > 0) {
    pts = square_loop(h, boundary);
    pts.pop_back();
  } else {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) pts.push_back({-h + 2 * h * i / (grid - 1), -h + 2 * h * j / (grid - 1)});
  }
  struct Row {
    MapResult m;
    double ui = NAN, vi = NAN;
    std::string error;
  };
  std::vector<Row> rows(pts.size());
  parallel_for(rows.size(), ctx.cfg.threads, [&](std::size_t k) {
    try {
      rows[k].m = W.W(W.chart().inverse(pts[k]));
      const ChartPoint c = W.chart().uv(rows[k].m.image);
      rows[k].ui = c.u;
      rows[k].vi = c.v;
    } catch (const ChartOutOfRange&) {
    } catch (const DomainError& e) {
      rows[k].error = e.what();
    }
  });
  auto out = ctx.open("map.csv");
  out << "u0,v0,s_eps,case,x_img,y_img,u_img,v_img\n";
  int failed = 0, counts[5] = {0, 0, 0, 0, 0};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Row& r = rows[k];
    if (!r.error.empty()) {
      ++failed;
      out << g17(pts[k].u) << "," << g17(pts[k].v) << ",nan,error,nan,nan,nan,nan\n";
      continue;
    }
    ++counts[static_cast<int>(r.m.case_tag)];
    out << g17(pts[k].u) << "," << g17(pts[k].v) << "," << g17(r.m.s_eps) << "," << to_string(r.m.case_tag) << ","
        << g17(r.m.image[0]) << "," << g17(r.m.image[1]) << "," << g17(r.ui) << "," << g17(r.vi) << "\n";
  }
  ctx.emit("map.json", {{"map", map_json(W)},
                        {"points", pts.size()},
                        {"failed", failed},
                        {"cases", {{"Case1", counts[1]}, {"Case2", counts[2]}, {"Case3", counts[3]}, {"Case4", counts[4]}}}});
  return failed ? 1 : 0;
}

int run_degree(const Context& ctx) {
  const SystemSpec sys = ctx.cfg.system();
  const CanardMap W(sys, geometry(ctx.cfg, sys), ctx.cfg.map_params());
  const DegreeReport r = degree_W(W, ctx.cfg.degree_options());
  json j = degree_json(r);
  j["map"] = map_json(W);
  ctx.emit("degree.json", j);
  return 0;
}

int run_canard(const Context& ctx, bool check_degree, bool allow_outside) {
  const SystemSpec sys = ctx.cfg.system();
  const auto g = geometry(ctx.cfg, sys);
  const CanardMap W(sys, g, ctx.cfg.map_params());
  SolverOptions o = ctx.cfg.solver_options();
  o.check_degree = check_degree;
  o.allow_outside = allow_outside;
  const CanardResult r = find_fixed_point(W, o);
  if (ctx.cfg.csv) {
    auto out = ctx.open("canard_orbit.csv");
    out << "t,x,y,z\n";
    for (const auto& s : r.orbit)
      out << g17(s.t) << "," << g17(s.state[0]) << "," << g17(s.state[1]) << "," << g17(s.state[2]) << "\n";
  }
  if (ctx.cfg.svg) {
    std::vector<cli::Panel> panels;
    for (auto [cx, cy, name] : {std::tuple{0, 2, "z"}, std::tuple{0, 1, "y"}}) {
      cli::Panel p{std::string("orbit in (x, ") + name + ")", "x", name, {}};
      cli::Series orbit;
      orbit.color = "steelblue";
      orbit.label = "periodic canard";
      for (const auto& s : r.orbit) {
        orbit.x.push_back(s.state[cx]);
        orbit.y.push_back(s.state[cy]);
      }
      p.series.push_back(orbit);
      p.series.push_back(curve(g->gamma_a, g->tau, 0.0, cx, cy, 1, "black", false, "attractive limit"));
      p.series.push_back(curve(g->gamma_r, 0.0, g->sigma, cx, cy, -1, "black", true, "repulsive limit"));
      cli::Series jump;
      jump.color = "gray";
      const Vec3 top{g->x_star, g->y_star, -g->x_star}, bottom{g->x_star, g->y_star, g->x_star};
      jump.x = {top[cx], bottom[cx]};
      jump.y = {top[cy], bottom[cy]};
      p.series.push_back(jump);
      panels.push_back(std::move(p));
    }
    cli::write_svg(ctx.path("canard.svg"), panels);
  }
  json j = canard_json(r);
  j["geometry"] = geometry_json(*g);
  j["map"] = map_json(W);
  ctx.emit("canard.json", j);
  return 0;
}

int run_sweep_eps(const Context& ctx, std::vector<double> eps_list, bool allow_outside) {
  const SystemSpec sys = ctx.cfg.system();
  const auto g = geometry(ctx.cfg, sys);
  SolverOptions o = ctx.cfg.solver_options();
  o.allow_outside = allow_outside;
  const auto rows = period_sweep(sys, g, ctx.cfg.map_params(), eps_list, o);
  auto out = ctx.open("sweep_eps.csv");
  out << "eps,ok,period,limit,abs_deviation,uv_norm,closure_error,case,inside,s,x,y,error\n";
  json jr = json::array();
  bool decreasing = true;
  double prev = INFINITY;
  int failed = 0;
  for (const auto& row : rows) {
    if (!row.ok) {
      ++failed;
      decreasing = false;
      out << g17(row.eps) << ",0,nan,nan,nan,nan,nan,,,nan,nan,nan,\"" << row.error << "\"\n";
      jr.push_back({{"eps", row.eps}, {"ok", false}, {"error", row.error}});
      continue;
    }
    const CanardResult& r = *row.result;
    const double dev = std::fabs(r.deviation), uvn = std::hypot(r.uv.u, r.uv.v);
    if (!(dev < prev)) decreasing = false;
    prev = dev;
    out << g17(row.eps) << ",1," << g17(r.period) << "," << g17(r.limit) << "," << g17(dev) << "," << g17(uvn) << ","
        << g17(r.closure_error) << "," << to_string(r.case_tag) << "," << (r.inside ? 1 : 0) << "," << g17(r.s) << ","
        << g17(r.fixed_point[0]) << "," << g17(r.fixed_point[1]) << ",\n";
    jr.push_back({{"eps", row.eps},
                  {"ok", true},
                  {"period", r.period},
                  {"abs_deviation", dev},
                  {"uv_norm", uvn},
                  {"closure_error", r.closure_error},
                  {"case", to_string(r.case_tag)},
                  {"inside", r.inside}});
  }
  const double limit = g->sigma - g->tau;
  ctx.emit("sweep_eps.json", {{"limit", limit},
                              {"rows", jr},
                              {"abs_deviation_strictly_decreasing", decreasing},
                              {"final_below_tenth_of_limit", failed == 0 && prev < 0.1 * limit}});
  return failed ? 1 : 0;
}

int run_sweep_a(const Context& ctx, const std::string& param, double a_lo, double a_hi, int steps, double tol,
                bool with_canard) {
  if (steps < 2) throw InputError("--steps must be at least 2");
  const SystemSpec base = ctx.cfg.system();
  struct Row {
    double a = 0;
    std::optional<ReducedGeometry> g;
    std::string error;
    std::optional<CanardResult> canard;
    std::string canard_error;
  };
  std::vector<Row> rows(steps);
  SolverOptions o = ctx.cfg.solver_options();
  o.threads = 1;
  o.degree.threads = 1;
  parallel_for(rows.size(), ctx.cfg.threads, [&](std::size_t i) {
    Row& r = rows[i];
    r.a = a_lo + (a_hi - a_lo) * static_cast<double>(i) / (steps - 1);
    const SystemSpec sys = base.with_param(param, r.a);
    try {
      r.g = compute_geometry(sys, ctx.cfg.geometry_options());
    } catch (const DomainError& e) {
      r.error = std::string(e.kind()) + ": " + e.what();
      return;
    }
    if (!with_canard) return;
    try {
      const CanardMap W(sys, std::make_shared<const ReducedGeometry>(*r.g), ctx.cfg.map_params());
      r.canard = find_fixed_point(W, o);
    } catch (const Error& e) {
      r.canard_error = std::string(e.kind()) + ": " + e.what();
    }
  });
  auto out = ctx.open("sweep_a.csv");
  out << param << ",exists,tau,sigma,x_star,y_star,A,period,abs_deviation,case,error\n";
  for (const auto& r : rows) {
    out << g17(r.a) << ",";
    if (!r.g) {
      out << "0,nan,nan,nan,nan,nan,nan,nan,,\"" << r.error << "\"\n";
      continue;
    }
    out << "1," << g17(r.g->tau) << "," << g17(r.g->sigma) << "," << g17(r.g->x_star) << "," << g17(r.g->y_star) << ","
        << g17(r.g->A) << ",";
    if (r.canard)
      out << g17(r.canard->period) << "," << g17(std::fabs(r.canard->deviation)) << "," << to_string(r.canard->case_tag)
          << ",\n";
    else if (!r.canard_error.empty())
      out << "nan,nan,,\"" << r.canard_error << "\"\n";
    else
      out << "nan,nan,,\n";
  }
  json j = {{"param", param}, {"a_lo", a_lo}, {"a_hi", a_hi}, {"steps", steps}};
  try {
    j["a0"] = find_a0(base, param, a_lo, a_hi, tol, ctx.cfg.geometry_options());
    j["tol"] = tol;
  } catch (const BadBracket& e) {
    j["a0"] = nullptr;
    j["a0_error"] = e.what();
  }
  ctx.emit("sweep_a.json", j);
  return 0;
}

int run_simulate(const Context& ctx, Vec3 s0, double t0, double t1, const std::string& reduced) {
  const SystemSpec sys = ctx.cfg.system();
  ode::Options oo;
  oo.rtol = ctx.cfg.rtol;
  oo.atol = ctx.cfg.atol;
  json j;
  if (reduced.empty()) {
    FullOptions fo;
    fo.ode = oo;
    const auto tr = integrate_full(sys, ctx.cfg.epsilon, s0, t0, t1, {}, fo);
    if (ctx.cfg.csv) {
      auto out = ctx.open("simulate.csv");
      write_csv(out, tr);
    }
    j = {{"status", ode::to_string(tr.status())},
         {"t_end", tr.t_end()},
         {"state_end", vec(tr.y_end())},
         {"events", json::parse(events_json(tr))}};
  } else {
    ReducedKind k;
    if (reduced == "attractive")
      k = ReducedKind::Attractive;
    else if (reduced == "repulsive")
      k = ReducedKind::Repulsive;
    else
      throw InputError("--reduced must be 'attractive' or 'repulsive'");
    const auto tr = integrate_reduced(sys, k, {s0[0], s0[1]}, t0, t1, {}, oo);
    if (ctx.cfg.csv) {
      auto out = ctx.open("simulate.csv");
      write_csv(out, tr);
    }
    j = {{"status", ode::to_string(tr.status())}, {"t_end", tr.t_end()}, {"state_end", vec(tr.y_end())}};
  }
  ctx.emit("simulate.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic canards of piecewise-smooth slow-fast systems"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> param_overrides;
  double eps = 0, alpha = 0, rho = 0;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  bool json_errors = false, svg = false;
  auto* o_cfg = app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* o_par = app.add_option("--param", param_overrides, "parameter override name=value (repeatable)");
  auto* o_eps = app.add_option("--epsilon", eps, "singular parameter eps");
  auto* o_alpha = app.add_option("--alpha", alpha, "parallelogram size alpha");
  auto* o_rho = app.add_option("--rho", rho, "activation delay rho");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_thr = app.add_option("--threads", threads, "worker threads (0: all cores)");
  auto* o_seed = app.add_option("--seed", seed, "seed for randomized sampling");
  app.add_flag("--json", json_errors, "print errors as JSON on stdout");
  auto* o_svg = app.add_flag("--svg", svg, "also write SVG plots");

  auto* check = app.add_subcommand("check", "standing assumptions and the reduced intersection");
  int samples = 0;
  auto* o_samples = check->add_option("--samples", samples, "grid points per axis");

  auto* reduced = app.add_subcommand("reduced", "reduced curves and their intersection");

  auto* map = app.add_subcommand("map", "evaluate W_eps on a grid or on the boundary");
  int grid = 17, boundary = 0;
  map->add_option("--grid", grid, "grid points per axis")->check(CLI::Range(2, 100000));
  map->add_option("--boundary", boundary, "boundary points per side (replaces the grid)");

  auto* degree = app.add_subcommand("degree", "rotation of id - W_eps on the parallelogram");
  int n0 = 0;
  auto* o_n0 = degree->add_option("--n0", n0, "initial samples per side");

  auto* canard = app.add_subcommand("canard", "fixed point of W_eps and the periodic canard");
  bool check_degree = false, allow_outside = false;
  canard->add_flag("--check-degree", check_degree, "require a nonzero degree first");
  canard->add_flag("--allow-outside", allow_outside, "accept a fixed point outside the parallelogram");

  auto* sweep_eps = app.add_subcommand("sweep-eps", "period against eps");
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  bool strict_inside = false;
  sweep_eps->add_option("--eps", eps_list, "eps values, descending");
  sweep_eps->add_flag("--strict-inside", strict_inside, "reject orbits outside the parallelogram");

  auto* sweep_a = app.add_subcommand("sweep-a", "geometry (and optionally the canard) against a parameter");
  std::string sweep_param = "a";
  double a_lo = 1.5, a_hi = 3.0, tol_a = 1e-3;
  int steps = 16;
  bool with_canard = false;
  sweep_a->add_option("--name", sweep_param, "parameter to sweep");
  sweep_a->add_option("--lo", a_lo, "lower end");
  sweep_a->add_option("--hi", a_hi, "upper end");
  sweep_a->add_option("--steps", steps, "number of values");
  sweep_a->add_option("--tol", tol_a, "bisection tolerance for a0");
  sweep_a->add_flag("--canard", with_canard, "also solve for the canard at each value");

  auto* simulate = app.add_subcommand("simulate", "integrate the full or a reduced system");
  double x0 = -1, y0 = 0, z0 = 0, t0 = 0, t1 = 5;
  std::string reduced_kind;
  simulate->add_option("--x0", x0);
  simulate->add_option("--y0", y0);
  simulate->add_option("--z0", z0);
  simulate->add_option("--t0", t0);
  simulate->add_option("--t1", t1);
  simulate->add_option("--reduced", reduced_kind, "attractive | repulsive");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Context ctx;
  ctx.want_json_errors = json_errors;
  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    std::cerr << "error (" << kind << "): " << msg << "\n";
    if (ctx.want_json_errors) std::cout << json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << "\n";
    return code;
  };

  try {
    if (o_cfg->count()) ctx.cfg = cli::load_config(config_path);
    if (o_par->count())
      for (const auto& s : param_overrides) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects name=value, got '" + s + "'");
        try {
          std::size_t used = 0;
          const double v = std::stod(s.substr(eq + 1), &used);
          if (used != s.size() - eq - 1) throw std::invalid_argument(s);
          ctx.cfg.params[s.substr(0, eq)] = v;
        } catch (const std::logic_error&) {
          throw ConfigError("--param value is not a number in '" + s + "'");
        }
      }
    if (o_eps->count()) ctx.cfg.epsilon = eps;
    if (o_alpha->count()) ctx.cfg.alpha = alpha;
    if (o_rho->count()) ctx.cfg.rho = rho;
    if (o_out->count()) ctx.cfg.out_dir = out_dir;
    if (o_thr->count()) ctx.cfg.threads = threads;
    if (o_seed->count()) ctx.cfg.seed = seed;
    if (o_svg->count()) ctx.cfg.svg = svg;
    if (o_samples->count()) ctx.cfg.check_samples = samples;
    if (o_n0->count()) ctx.cfg.degree_n0 = n0;
    if (!(ctx.cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");

    if (*check) return run_check(ctx);
    if (*reduced) return run_reduced(ctx);
    if (*map) return run_map(ctx, grid, boundary);
    if (*degree) return run_degree(ctx);
    if (*canard) return run_canard(ctx, check_degree, allow_outside);
    if (*sweep_eps) return run_sweep_eps(ctx, eps_list, !strict_inside);
    if (*sweep_a) return run_sweep_a(ctx, sweep_param, a_lo, a_hi, steps, tol_a, with_canard);
    if (*simulate) return run_simulate(ctx, {x0, y0, z0}, t0, t1, reduced_kind);
    return fail(2, "UsageError", "no subcommand");
  } catch (const InputError& e) {
    return fail(2, e.kind(), e.what());
  } catch (const Error& e) {
    return fail(1, e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(2, "IOError", e.what());
  }
}
