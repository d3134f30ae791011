#include "canard/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "canard/errors.hpp"
#include "canard/parallel.hpp"

namespace canard {

namespace {

struct Raw {
  Vec2 p{};
  double s = 0.0;
  std::vector<OrbitSample> orbit;
  double closure = 0.0;
  double residual = 0.0;
  double t_match = 0.0;
  std::string method;
  int iterations = 0;
  std::size_t evals = 0;
};

template <class Eval>
std::vector<OrbitSample> sample_orbit(double t0, double t1, double dt, Eval eval) {
  std::vector<OrbitSample> out;
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / dt));
  out.reserve(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    out.push_back({t, eval(t)});
  }
  out.push_back({t1, eval(t1)});
  return out;
}

Adherence adherence(const std::vector<OrbitSample>& orbit, double tau, double tilde, double s, double eps, double M,
                    const SolverOptions& opt) {
  Adherence a;
  a.layer = opt.layer_factor * eps * std::fabs(std::log(eps));
  a.bound = opt.adherence_factor * M * eps;
  a.attr_from = tau + a.layer;
  a.attr_to = tilde - a.layer;
  a.repul_from = tilde + a.layer;
  a.repul_to = s - a.layer;
  for (const auto& o : orbit) {
    const double x = o.state[0], z = o.state[2];
    if (o.t >= a.attr_from && o.t <= a.attr_to) {
      a.max_attr = std::max(a.max_attr, std::fabs(z - x));
      ++a.attr_samples;
    }
    if (o.t >= a.repul_from && o.t <= a.repul_to) {
      a.max_repul = std::max(a.max_repul, std::fabs(z + x));
      ++a.repul_samples;
    }
  }
  a.ok = a.max_attr <= a.bound && a.max_repul <= a.bound;
  return a;
}

CanardResult finish(const CanardMap& map, const SolverOptions& opt, Raw raw) {
  const ReducedGeometry& g = map.geometry();
  const SystemSpec& sys = map.system();
  CanardResult r;
  r.fixed_point = raw.p;
  r.uv = map.chart().uv(raw.p);
  const double half = 0.5 * map.alpha();
  r.inside = std::fabs(r.uv.u) <= half && std::fabs(r.uv.v) <= half;
  r.s = raw.s;
  r.period = raw.s - g.tau;
  r.limit = g.sigma - g.tau;
  r.deviation = r.period - r.limit;
  r.closure_error = raw.closure;
  r.residual = raw.residual;
  r.t_match = raw.t_match;
  r.case_tag = case_of(raw.s, g.sigma, map.alpha());
  r.method = raw.method;
  r.iterations = raw.iterations;
  r.evals = raw.evals;
  r.tilde = tilde_t(sys, g, raw.p, &map.chart()).t;

  // What a single forward shot from the section makes of this orbit.
  FullOptions fo = opt.shoot.full;
  fo.stop_on_z_down_after = r.tilde + map.rho();
  try {
    const auto tr = integrate_full(sys, map.eps(), {raw.p[0], raw.p[1], 0.0}, g.tau, g.T_r, {}, fo);
    r.forward_s = tr.t_end();
    r.forward_drift = norm(tr.y_end() - Vec3{raw.p[0], raw.p[1], 0.0});
  } catch (const DomainError&) {
    r.forward_s = std::numeric_limits<double>::quiet_NaN();
    r.forward_drift = std::numeric_limits<double>::infinity();
  }
  r.adherence = adherence(raw.orbit, g.tau, r.tilde, raw.s, map.eps(), map.params().M_est, opt);
  r.orbit = std::move(raw.orbit);
  return r;
}

std::optional<Raw> two_sided(const CanardMap& map, const SolverOptions& opt, std::string& note) {
  const ReducedGeometry& g = map.geometry();
  const SystemSpec& sys = map.system();
  ShootOptions so = opt.shoot;
  std::size_t evals = 0;
  auto residual = [&](const Vec3& x) {
    ++evals;
    return match_defect(sys, map.eps(), {x[0], x[1]}, g.tau, {x[0], x[1]}, x[2], so);
  };
  NewtonResult nr = newton3(residual, {g.x_star, g.y_star, g.sigma}, opt.newton);
  if (!nr.converged) {
    std::ostringstream os;
    os << "two-sided shooting: no convergence after " << nr.iterations << " iterations (defect " << norm(nr.residual)
       << ")";
    note = os.str();
    return std::nullopt;
  }
  int iterations = nr.iterations;
  // Re-match where the orbit crosses z = 0 near the fold.
  try {
    const Halves h = shoot_halves(sys, map.eps(), {nr.x[0], nr.x[1]}, g.tau, {nr.x[0], nr.x[1]}, nr.x[2], so);
    if (const auto tz = first_z_up(h); tz && *tz > g.tau && *tz < nr.x[2]) {
      const ShootOptions keep = so;
      so.t_match = *tz;
      const NewtonResult polished = newton3(residual, nr.x, opt.newton);
      if (polished.converged) {
        nr = polished;
        iterations += polished.iterations;
      } else {
        so = keep;
      }
    }
  } catch (const DomainError&) {
  }

  Raw raw;
  raw.p = {nr.x[0], nr.x[1]};
  raw.s = nr.x[2];
  raw.t_match = so.t_match;
  const Halves h = shoot_halves(sys, map.eps(), raw.p, g.tau, raw.p, raw.s, so);
  raw.closure = norm(h.defect);
  raw.residual = raw.closure;
  raw.orbit = sample_orbit(g.tau, raw.s, opt.sample_dt, [&](double t) {
    return t <= so.t_match ? h.forward.eval(t) : h.backward.eval(t);
  });
  raw.method = "two-sided shooting";
  raw.iterations = iterations;
  raw.evals = evals;
  return raw;
}

std::optional<Raw> broyden(const CanardMap& map, const SolverOptions& opt, ChartPoint c, std::string& note) {
  const ReducedGeometry& g = map.geometry();
  const double half = 0.5 * map.alpha() * (1.0 - 1e-9);
  auto clamp = [half](ChartPoint q) {
    return ChartPoint{std::clamp(q.u, -half, half), std::clamp(q.v, -half, half)};
  };
  c = clamp(c);
  std::size_t evals = 0;
  Vec2 seed = map.chart().linear_inverse(c);
  struct Eval {
    Vec2 p, F;
    MapResult m;
  };
  auto F = [&](const ChartPoint& q) {
    Eval e;
    e.p = map.chart().inverse(q, seed);
    e.m = map.W(e.p);
    e.F = e.p - e.m.image;
    ++evals;
    return e;
  };

  Eval cur = F(c);
  seed = cur.p;
  const double h = 1e-4 * map.alpha();
  // J maps (du, dv) to dF.
  std::array<Vec2, 2> J{};
  for (int j = 0; j < 2; ++j) {
    ChartPoint q = c;
    (j == 0 ? q.u : q.v) += (j == 0 ? (c.u + h > half ? -h : h) : (c.v + h > half ? -h : h));
    const Eval e = F(q);
    const double dq = j == 0 ? q.u - c.u : q.v - c.v;
    J[j] = (1.0 / dq) * (e.F - cur.F);
  }
  int it = 0;
  for (; it < opt.broyden_max_iter && norm(cur.F) > opt.broyden_tol; ++it) {
    const double det = cross(J[0], J[1]);
    if (!(std::fabs(det) > 0.0) || !std::isfinite(det)) break;
    // Solve [J0 J1] d = -F.
    const Vec2 d{-cross(cur.F, J[1]) / det, -cross(J[0], cur.F) / det};
    double lam = 1.0;
    bool moved = false;
    for (int k = 0; k < 10; ++k, lam *= 0.5) {
      const ChartPoint q = clamp({c.u + lam * d[0], c.v + lam * d[1]});
      Eval e;
      try {
        e = F(q);
      } catch (const DomainError&) {
        continue;
      }
      if (norm(e.F) < norm(cur.F)) {
        const Vec2 dc{q.u - c.u, q.v - c.v};
        const Vec2 dF = e.F - cur.F;
        const double dd = dot(dc, dc);
        if (dd > 0.0) {
          // Good Broyden: J += (dF - J dc) dc^T / |dc|^2
          const Vec2 Jdc = dc[0] * J[0] + dc[1] * J[1];
          const Vec2 corr = (1.0 / dd) * (dF - Jdc);
          J[0] = J[0] + dc[0] * corr;
          J[1] = J[1] + dc[1] * corr;
        }
        c = q;
        cur = e;
        seed = cur.p;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(norm(cur.F) <= opt.broyden_tol)) {
    std::ostringstream os;
    os << "Broyden on W: |p - W(p)| = " << norm(cur.F) << " after " << it << " iterations";
    note = os.str();
    return std::nullopt;
  }

  Raw raw;
  raw.p = cur.p;
  raw.s = cur.m.s_eps;
  raw.residual = norm(cur.F);
  raw.closure = norm(cur.m.detail.state - Vec3{cur.p[0], cur.p[1], 0.0});
  raw.t_match = std::numeric_limits<double>::quiet_NaN();
  FullOptions fo = map.params().full;
  fo.stop_on_z_down_after = cur.m.detail.activation;
  const auto tr = integrate_full(map.system(), map.eps(), {cur.p[0], cur.p[1], 0.0}, g.tau, raw.s, {}, fo);
  raw.orbit = sample_orbit(g.tau, raw.s, opt.sample_dt, [&](double t) { return tr.eval(t); });
  raw.method = "Broyden on W";
  raw.iterations = it;
  raw.evals = evals;
  return raw;
}

}  // namespace

std::optional<Subdivision> subdivide(const UVRect& rect, const std::function<int(const UVRect&)>& degree,
                                      double min_diameter, int threads) {
  auto safe = [&](const UVRect& r) {
    try {
      return degree(r);
    } catch (const Error&) {
      return 0;
    }
  };
  if (safe(rect) == 0) return std::nullopt;
  Subdivision cur{rect, 0};
  while (cur.rect.diameter() >= min_diameter) {
    const UVRect& r = cur.rect;
    const double um = 0.5 * (r.u0 + r.u1), vm = 0.5 * (r.v0 + r.v1);
    const std::array<UVRect, 4> kids{UVRect{r.u0, um, r.v0, vm}, UVRect{um, r.u1, r.v0, vm},
                                     UVRect{r.u0, um, vm, r.v1}, UVRect{um, r.u1, vm, r.v1}};
    std::array<int, 4> deg{};
    parallel_for(4, threads, [&](std::size_t i) { deg[i] = safe(kids[i]); });
    const auto it = std::find_if(deg.begin(), deg.end(), [](int d) { return d != 0; });
    if (it == deg.end()) break;
    cur.rect = kids[static_cast<std::size_t>(it - deg.begin())];
    ++cur.levels;
  }
  return cur;
}

CanardResult find_fixed_point(const CanardMap& map, const SolverOptions& opt) {
  std::optional<DegreeReport> deg;
  if (opt.check_degree) {
    deg = degree_W(map, opt.degree);
    if (deg->degree == 0) throw DegreeZero("degree of id - W on the parallelogram is 0");
  }
  std::vector<std::string> notes;
  auto accept = [&](std::optional<Raw>&& raw) -> std::optional<CanardResult> {
    if (!raw) return std::nullopt;
    CanardResult r = finish(map, opt, std::move(*raw));
    if (!r.inside && !opt.allow_outside) {
      std::ostringstream os;
      os << r.method << ": orbit found at (u, v) = (" << r.uv.u << ", " << r.uv.v << "), outside the parallelogram";
      notes.push_back(os.str());
      return std::nullopt;
    }
    r.degree = deg;
    return r;
  };

  std::string note;
  if (opt.two_sided) {
    try {
      if (auto r = accept(two_sided(map, opt, note))) return *r;
    } catch (const DomainError& e) {
      note = std::string("two-sided shooting: ") + e.what();
    }
    if (!note.empty()) notes.push_back(note);
  }

  if (opt.broyden_fallback) {
    note.clear();
    try {
      if (auto r = accept(broyden(map, opt, {0.0, 0.0}, note))) return *r;
    } catch (const DomainError& e) {
      note = std::string("Broyden on W: ") + e.what();
    }
    if (!note.empty()) notes.push_back(note);
  }

  if (opt.subdivision_fallback) {
    DegreeOptions dopt = opt.degree;
    dopt.n0 = opt.subdivision_n0;
    dopt.threads = 1;
    const auto sub = subdivide(
        full_rect(map.alpha()), [&](const UVRect& r) { return degree_W(map, r, dopt).degree; },
        opt.subdivision_diameter, opt.threads);
    if (!sub) {
      notes.emplace_back("subdivision: no rectangle with nonzero degree");
    } else {
      note.clear();
      try {
        if (auto r = accept(broyden(map, opt, sub->rect.center(), note))) {
          r->method = "subdivision + Broyden";
          return *r;
        }
      } catch (const DomainError& e) {
        note = std::string("subdivision + Broyden: ") + e.what();
      }
      if (!note.empty()) notes.push_back(note);
    }
  }

  std::ostringstream os;
  os << "no fixed point of W found";
  for (const auto& n : notes) os << "; " << n;
  throw NoConvergence(os.str());
}

std::vector<SweepRow> period_sweep(const SystemSpec& sys, std::shared_ptr<const ReducedGeometry> geom,
                                   const MapParams& base, const std::vector<double>& eps_list,
                                   const SolverOptions& opt) {
  if (eps_list.empty()) throw InputError("empty eps list");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw InputError("eps list must be strictly descending");
  std::vector<SweepRow> rows(eps_list.size());
  SolverOptions inner = opt;
  inner.threads = 1;
  inner.degree.threads = 1;
  parallel_for(rows.size(), opt.threads, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.eps = eps_list[i];
    try {
      MapParams p = base;
      p.eps = row.eps;
      const CanardMap map(sys, geom, p);
      row.result = find_fixed_point(map, inner);
      row.ok = true;
    } catch (const Error& e) {
      row.error = std::string(e.kind()) + ": " + e.what();
    }
  });
  return rows;
}

double find_a0(const SystemSpec& base, const std::string& param, double a_lo, double a_hi, double tol_a,
               const GeometryOptions& geo) {
  if (!(a_lo < a_hi) || !(tol_a > 0.0)) throw InputError("find_a0: need a_lo < a_hi and tol_a > 0");
  auto exists = [&](double a) {
    try {
      compute_geometry(base.with_param(param, a), geo);
      return true;
    } catch (const NoIntersection&) {
      return false;
    } catch (const DegenerateTangency&) {
      return true;
    }
  };
  const bool lo = exists(a_lo), hi = exists(a_hi);
  if (lo || !hi) {
    std::ostringstream os;
    os << "find_a0: need no intersection at " << a_lo << " and one at " << a_hi << " (found " << lo << ", " << hi
       << ")";
    throw BadBracket(os.str());
  }
  while (a_hi - a_lo > tol_a) {
    const double m = 0.5 * (a_lo + a_hi);
    (exists(m) ? a_hi : a_lo) = m;
  }
  return 0.5 * (a_lo + a_hi);
}

}  // namespace canard
