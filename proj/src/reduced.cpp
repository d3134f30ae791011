#include "canard/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "canard/errors.hpp"

namespace canard {

namespace {

std::vector<PolyPoint> sample_polyline(const Trajectory<2>& tr, double spacing) {
  std::vector<PolyPoint> out;
  out.push_back({tr.t_start(), tr.y_start()});
  for (const auto& s : tr.segments()) {
    const double chord = norm(s.y1 - s.y0);
    const int k = std::max(1, static_cast<int>(std::ceil(2.0 * chord / spacing)));
    for (int i = 1; i <= k; ++i) {
      const double th = static_cast<double>(i) / k;
      const double t = i == k ? s.t1 : s.t0 + th * (s.t1 - s.t0);
      out.push_back({t, i == k ? s.y1 : s.eval_theta(th)});
    }
  }
  return out;
}

// First return of x to 0 (dwell guarded at the start), or the clamped horizon.
Trajectory<2> canonical_orbit(const SystemSpec& sys, ReducedKind kind, double t1, const ode::Options& o) {
  EventSpec<2> ret;
  ret.id = "x_return";
  ret.fn = [](double, const Vec2& p) { return p[0]; };
  ret.terminal = true;
  return integrate_reduced(sys, kind, {0.0, 0.0}, 0.0, t1, {ret}, o);
}

struct CellKey {
  std::int64_t i, j;
  bool operator==(const CellKey& o) const { return i == o.i && j == o.j; }
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<std::int64_t>()(k.i * 73856093LL ^ k.j * 19349663LL);
  }
};

// Proper or touching intersection of segments [p0,p1] and [q0,q1].
std::optional<std::pair<double, double>> segment_hit(const Vec2& p0, const Vec2& p1, const Vec2& q0,
                                                     const Vec2& q1) {
  const Vec2 r = p1 - p0, w = q1 - q0;
  const double den = cross(r, w);
  if (den == 0.0) return std::nullopt;
  const Vec2 d = q0 - p0;
  const double s = cross(d, w) / den;
  const double u = cross(d, r) / den;
  if (s < 0.0 || s > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return std::make_pair(s, u);
}

std::vector<std::pair<double, double>> raw_crossings(const std::vector<PolyPoint>& a,
                                                     const std::vector<PolyPoint>& r, double cell) {
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  auto cells_of = [cell](const Vec2& p, const Vec2& q, auto&& fn) {
    const auto i0 = static_cast<std::int64_t>(std::floor(std::min(p[0], q[0]) / cell));
    const auto i1 = static_cast<std::int64_t>(std::floor(std::max(p[0], q[0]) / cell));
    const auto j0 = static_cast<std::int64_t>(std::floor(std::min(p[1], q[1]) / cell));
    const auto j1 = static_cast<std::int64_t>(std::floor(std::max(p[1], q[1]) / cell));
    for (auto i = i0; i <= i1; ++i)
      for (auto j = j0; j <= j1; ++j) fn(CellKey{i, j});
  };
  for (std::size_t k = 0; k + 1 < r.size(); ++k)
    cells_of(r[k].p, r[k + 1].p, [&](const CellKey& c) { grid[c].push_back(k); });

  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    std::vector<std::size_t> cand;
    cells_of(a[k].p, a[k + 1].p, [&](const CellKey& c) {
      auto it = grid.find(c);
      if (it != grid.end()) cand.insert(cand.end(), it->second.begin(), it->second.end());
    });
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (std::size_t m : cand) {
      if (auto h = segment_hit(a[k].p, a[k + 1].p, r[m].p, r[m + 1].p)) {
        const double ta = a[k].t + h->first * (a[k + 1].t - a[k].t);
        const double tr = r[m].t + h->second * (r[m + 1].t - r[m].t);
        out.emplace_back(ta, tr);
      }
    }
  }
  return out;
}

}  // namespace

double transversality(const SystemSpec& sys, const Vec2& p) {
  const Vec2 fa = sys.reduced_rhs(ReducedKind::Attractive, p);
  const Vec2 fr = sys.reduced_rhs(ReducedKind::Repulsive, p);
  return fa[0] * fr[1] - fr[0] * fa[1];
}

ReducedGeometry compute_geometry(const SystemSpec& sys, const GeometryOptions& opt) {
  if (!(opt.horizon > 0.0) || !(opt.spacing > 0.0)) throw InputError("geometry: horizon and spacing must be positive");
  const Vec3 o{0.0, 0.0, 0.0};
  if (std::fabs(sys.f(o)) > 1e-12 || !(sys.g(o) > 0.0))
    throw DomainError("geometry: need f(0,0,0) = 0 and g(0,0,0) > 0");

  ReducedGeometry g;
  g.traj_a = canonical_orbit(sys, ReducedKind::Attractive, -opt.horizon, opt.ode);
  g.traj_r = canonical_orbit(sys, ReducedKind::Repulsive, opt.horizon, opt.ode);
  g.T_a = g.traj_a.t_end();
  g.T_r = g.traj_r.t_end();
  g.T_a_clamped = g.traj_a.status() != Status::TerminalEvent;
  g.T_r_clamped = g.traj_r.status() != Status::TerminalEvent;
  g.gamma_a = sample_polyline(g.traj_a, opt.spacing);
  g.gamma_r = sample_polyline(g.traj_r, opt.spacing);

  const auto raw = raw_crossings(g.gamma_a, g.gamma_r, 2.0 * opt.spacing);

  // Newton on (ta, tr) -> w_a(ta) - w_r(tr).
  for (auto [ta, tr] : raw) {
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      const Vec2 pa = g.w_a(ta), pr = g.w_r(tr);
      const Vec2 F = pa - pr;
      const Vec2 da = sys.reduced_rhs(ReducedKind::Attractive, pa);
      const Vec2 dr = sys.reduced_rhs(ReducedKind::Repulsive, pr);
      // J = [da, -dr]
      const double det = -da[0] * dr[1] + dr[0] * da[1];
      if (det == 0.0) break;
      const double dta = (-F[0] * dr[1] + dr[0] * F[1]) / det;
      const double dtr = (da[0] * F[1] - da[1] * F[0]) / det;
      ta = std::clamp(ta - dta, g.T_a, 0.0);
      tr = std::clamp(tr - dtr, 0.0, g.T_r);
      if (std::fabs(dta) + std::fabs(dtr) < 1e-14 * (1.0 + std::fabs(ta) + std::fabs(tr))) {
        ok = norm(g.w_a(ta) - g.w_r(tr)) < 1e-10;
        break;
      }
    }
    if (!ok) continue;
    if (std::fabs(ta) < 1e-6 && std::fabs(tr) < 1e-6) continue;  // shared start at the origin
    if (ta <= g.T_a || tr >= g.T_r) continue;
    const bool dup = std::any_of(g.intersections.begin(), g.intersections.end(), [&](const Intersection& x) {
      return std::fabs(x.tau - ta) < 1e-7 && std::fabs(x.sigma - tr) < 1e-7;
    });
    if (dup) continue;
    const Vec2 p = 0.5 * (g.w_a(ta) + g.w_r(tr));
    g.intersections.push_back({ta, tr, p, transversality(sys, p)});
  }
  std::sort(g.intersections.begin(), g.intersections.end(),
            [](const Intersection& a, const Intersection& b) { return a.sigma < b.sigma; });

  if (g.intersections.empty()) throw NoIntersection("the reduced curves do not intersect within the horizon");
  if (opt.index >= g.intersections.size())
    throw InputError("geometry: intersection index " + std::to_string(opt.index) + " out of range (" +
                     std::to_string(g.intersections.size()) + " found)");
  g.selected = opt.index;
  const Intersection& sel = g.intersections[opt.index];
  g.tau = sel.tau;
  g.sigma = sel.sigma;
  g.x_star = sel.point[0];
  g.y_star = sel.point[1];
  g.A = sel.A;
  if (std::fabs(g.A) < opt.tol_A) throw DegenerateTangency("|A| = " + std::to_string(std::fabs(g.A)));
  return g;
}

double default_alpha(const ReducedGeometry& geom) { return 0.1 * std::min(std::fabs(geom.tau), geom.sigma); }

// --- LocalCurve -------------------------------------------------------------

LocalCurve::LocalCurve(std::shared_ptr<const SystemSpec> sys, ReducedKind kind, const Trajectory<2>& traj,
                       double t_lo, double t_hi, double t_base)
    : sys_(std::move(sys)), kind_(kind) {
  for (const auto& s : traj.segments()) {
    const double a = std::min(s.t0, s.t1), b = std::max(s.t0, s.t1);
    if (b < t_lo || a > t_hi) continue;
    segs_.push_back(s);
  }
  if (segs_.empty()) throw DomainError("local curve: empty time window");
  std::sort(segs_.begin(), segs_.end(), [](const auto& x, const auto& y) {
    return std::min(x.t0, x.t1) < std::min(y.t0, y.t1);
  });
  t_lo_ = std::max(t_lo, std::min(segs_.front().t0, segs_.front().t1));
  t_hi_ = std::min(t_hi, std::max(segs_.back().t0, segs_.back().t1));
  t_base_ = std::clamp(t_base, t_lo_, t_hi_);
  base_ = at(t_base_);
  base_vel_ = velocity(base_);
}

Vec2 LocalCurve::velocity(const Vec2& p) const { return sys_->reduced_rhs(kind_, p); }

Vec2 LocalCurve::at(double t) const {
  t = std::clamp(t, t_lo_, t_hi_);
  auto it = std::lower_bound(segs_.begin(), segs_.end(), t,
                             [](const ode::Segment<2>& s, double v) { return std::max(s.t0, s.t1) < v; });
  if (it == segs_.end()) it = std::prev(segs_.end());
  return it->eval(t);
}

double LocalCurve::foot(const Vec2& q) const {
  double t = std::clamp(t_base_ + dot(q - base_, base_vel_) / dot(base_vel_, base_vel_), t_lo_, t_hi_);
  for (int it = 0; it < 60; ++it) {
    const Vec2 c = at(t);
    const Vec2 d1 = velocity(c);
    const double h = 1e-6;
    const Vec2 d2 = (1.0 / (2.0 * h)) * (velocity(c + h * d1) - velocity(c - h * d1));
    const Vec2 r = c - q;
    const double gval = dot(r, d1);
    const double gp = std::max(dot(d1, d1) + dot(r, d2), 0.25 * dot(d1, d1));
    const double step = gval / gp;
    const double tn = std::clamp(t - step, t_lo_, t_hi_);
    const double moved = std::fabs(tn - t);
    t = tn;
    if (moved <= 1e-15 * std::max(1.0, std::fabs(t))) break;
  }
  return t;
}

Vec2 LocalCurve::unit_tangent(double t) const {
  const Vec2 d = velocity(at(t));
  return (1.0 / norm(d)) * d;
}

double LocalCurve::signed_distance(const Vec2& q) const {
  const double t = foot(q);
  const Vec2 c = at(t);
  const Vec2 d = velocity(c);
  return cross(d, q - c) / norm(d);
}

bool LocalCurve::on_curve(const Vec2& q, double tol) const {
  const double t = foot(q);
  if (t <= t_lo_ || t >= t_hi_) return false;
  return norm(at(t) - q) <= tol;
}

// --- Chart ------------------------------------------------------------------

Chart::Chart(const SystemSpec& sys, const ReducedGeometry& geom, double alpha, ChartOptions opt)
    : sys_(std::make_shared<const SystemSpec>(sys)),
      alpha_(alpha),
      window_(opt.window_factor * alpha),
      opt_(opt),
      star_(geom.star()) {
  if (!(alpha > 0.0)) throw InputError("chart: alpha must be positive");
  Fa_ = sys.reduced_rhs(ReducedKind::Attractive, star_);
  Fr_ = sys.reduced_rhs(ReducedKind::Repulsive, star_);
  A_ = cross(Fa_, Fr_);
  // Curve pieces long enough for flow times up to the window plus a chart diameter.
  const double L = 3.0 * window_;
  cr_ = LocalCurve(sys_, ReducedKind::Repulsive, geom.traj_r, std::max(0.0, geom.sigma - L),
                   std::min(geom.T_r, geom.sigma + L), geom.sigma);
  ca_ = LocalCurve(sys_, ReducedKind::Attractive, geom.traj_a, std::max(geom.T_a, geom.tau - L),
                   std::min(0.0, geom.tau + L), geom.tau);
}

double Chart::flow_time(ReducedKind kind, const LocalCurve& target, const Vec2& p) const {
  // Within the event dwell band the crossing is resolved to first order
  // (the error is quadratic in the distance).
  const double sd = target.signed_distance(p);
  if (std::fabs(sd) <= 1e-9) {
    const double rate = cross(target.unit_tangent(target.foot(p)), sys_->reduced_rhs(kind, p));
    return -sd / rate;
  }
  EventSpec<2> hit;
  hit.id = "hit";
  hit.fn = [&target](double, const Vec2& q) { return target.signed_distance(q); };
  hit.terminal = true;
  hit.accept = [&target](double, const Vec2& q) { return target.on_curve(q, 1e-8); };

  double best = std::numeric_limits<double>::infinity();
  const auto fwd = integrate_reduced(*sys_, kind, p, 0.0, window_, {hit}, opt_.ode);
  if (fwd.status() == Status::TerminalEvent) best = fwd.events().front().t;
  const double back = std::isfinite(best) ? best : window_;
  const auto bwd = integrate_reduced(*sys_, kind, p, 0.0, -back, {hit}, opt_.ode);
  if (bwd.status() == Status::TerminalEvent && std::fabs(bwd.events().front().t) < std::fabs(best))
    best = bwd.events().front().t;
  if (!std::isfinite(best)) throw ChartOutOfRange("no curve hit within |t| <= " + std::to_string(window_));
  return best;
}

double Chart::u(const Vec2& p) const { return flow_time(ReducedKind::Attractive, cr_, p); }
double Chart::v(const Vec2& p) const { return flow_time(ReducedKind::Repulsive, ca_, p); }
ChartPoint Chart::uv(const Vec2& p) const { return {u(p), v(p)}; }

Vec2 Chart::linear_inverse(const ChartPoint& c) const { return star_ - c.u * Fa_ - c.v * Fr_; }

ChartPoint Chart::linear_uv(const Vec2& p) const {
  // p - p* = -u Fa - v Fr
  const Vec2 d = p - star_;
  return {-cross(d, Fr_) / A_, -cross(Fa_, d) / A_};
}

Vec2 Chart::inverse(const ChartPoint& target, std::optional<Vec2> seed) const {
  Vec2 p = seed ? *seed : linear_inverse(target);
  try {
    for (int it = 0; it < opt_.max_newton; ++it) {
      const ChartPoint c = uv(p);
      const double ru = c.u - target.u, rv = c.v - target.v;
      if (std::hypot(ru, rv) <= opt_.inverse_tol) return p;
      const double h = 1e-7;
      const ChartPoint cx = uv({p[0] + h, p[1]});
      const ChartPoint cy = uv({p[0], p[1] + h});
      const double a = (cx.u - c.u) / h, b = (cy.u - c.u) / h;
      const double cc = (cx.v - c.v) / h, d = (cy.v - c.v) / h;
      const double det = a * d - b * cc;
      if (det == 0.0 || !std::isfinite(det)) break;
      Vec2 step{(d * ru - b * rv) / det, (-cc * ru + a * rv) / det};
      // Keep steps within a fraction of the window.
      const double lim = 0.5 * window_ * norm(Fa_);
      const double n = norm(step);
      if (n > lim) step = (lim / n) * step;
      p = p - step;
    }
  } catch (const ChartOutOfRange&) {
  }
  throw NoConvergence("chart inverse did not converge for (u, v) = (" + std::to_string(target.u) + ", " +
                      std::to_string(target.v) + ")");
}

// --- Parallelogram ----------------------------------------------------------

std::vector<ChartPoint> square_loop(double half, int n_per_side) {
  if (n_per_side < 1) throw InputError("square_loop: need at least one point per side");
  const ChartPoint corners[4] = {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
  std::vector<ChartPoint> out;
  for (int s = 0; s < 4; ++s) {
    const ChartPoint a = corners[s], b = corners[(s + 1) % 4];
    for (int i = 0; i < n_per_side; ++i) {
      const double th = static_cast<double>(i) / n_per_side;
      out.push_back({a.u + th * (b.u - a.u), a.v + th * (b.v - a.v)});
    }
  }
  out.push_back(out.front());
  return out;
}

Parallelogram make_parallelogram(const Chart& chart, int n_per_side) {
  Parallelogram P;
  P.alpha = chart.alpha();
  P.orientation = chart.orientation();
  const double h = 0.5 * P.alpha;
  P.boundary_uv = square_loop(h, n_per_side);
  std::optional<Vec2> seed;
  for (const auto& c : P.boundary_uv) {
    const Vec2 p = chart.inverse(c, seed);
    P.boundary_xy.push_back(p);
    seed = p;
  }
  // Q- on v = +h sgnA, Q+ on v = -h sgnA, sampled for u from -h to h.
  const double vm = h * P.orientation;
  for (int i = 0; i <= n_per_side; ++i) {
    const double u = -h + 2.0 * h * i / n_per_side;
    P.q_minus_uv.push_back({u, vm});
    P.q_plus_uv.push_back({u, -vm});
  }
  seed.reset();
  for (const auto& c : P.q_minus_uv) P.q_minus.push_back(*(seed = chart.inverse(c, seed)));
  seed.reset();
  for (const auto& c : P.q_plus_uv) P.q_plus.push_back(*(seed = chart.inverse(c, seed)));
  return P;
}

double choose_alpha(const SystemSpec& sys, const ReducedGeometry& geom, ChartOptions opt) {
  double alpha = default_alpha(geom);
  for (int k = 0; k < 8; ++k, alpha *= 0.5) {
    try {
      const Chart chart(sys, geom, alpha, opt);
      std::optional<Vec2> seed;
      for (const auto& c : square_loop(0.5 * alpha, 2)) seed = chart.inverse(c, seed);
      return alpha;
    } catch (const DomainError&) {
    }
  }
  throw NoConvergence("no alpha with an invertible chart");
}

// --- R crossings ------------------------------------------------------------

const char* to_string(PointClass c) { return c == PointClass::Stabilizing ? "stabilizing" : "destabilizing"; }

namespace {

// Crossing of x = 0 with y <= 0 on the step that ends in a graze event, if
// x was still negative at the start of that step.
std::optional<ode::Event<2>> grazing_crossing(const Trajectory<2>& tr, const ode::Event<2>& e) {
  for (const auto& seg : tr.segments()) {
    if (std::min(seg.t0, seg.t1) > e.t || std::max(seg.t0, seg.t1) < e.t) continue;
    double a = 0.0, b = (e.t - seg.t0) / (seg.t1 - seg.t0);
    if (!(seg.eval_theta(a)[0] < 0.0) || !(seg.eval_theta(b)[0] > 0.0)) return std::nullopt;
    for (int i = 0; i < 200 && b - a > 1e-16; ++i) {
      const double m = 0.5 * (a + b);
      (seg.eval_theta(m)[0] < 0.0 ? a : b) = m;
    }
    const Vec2 q = seg.eval_theta(b);
    if (q[1] > 0.0) return std::nullopt;
    return ode::Event<2>{seg.t0 + b * (seg.t1 - seg.t0), "x_axis", q};
  }
  return std::nullopt;
}

}  // namespace

TildeResult tilde_t(const SystemSpec& sys, const ReducedGeometry& geom, const Vec2& p0, const Chart* chart,
                    const TildeOptions& opt) {
  const double lo = geom.T_a + opt.margin, hi = geom.T_r - opt.margin;
  const double tau = geom.tau;
  if (!(lo < tau && tau < hi)) throw NoCrossing("tilde_t: empty time window");

  // One pair of specs per axis: non-terminal before t = 0, terminal after.
  auto axis_events = [](bool terminal_after_zero, bool forward) {
    std::vector<EventSpec<2>> ev;
    for (int axis = 0; axis < 2; ++axis) {
      EventSpec<2> e;
      e.id = axis == 0 ? "x_axis" : "y_axis";  // x_axis: x = 0 with y <= 0
      e.fn = [axis](double, const Vec2& p) { return p[axis]; };
      const int other = 1 - axis;
      if (forward && terminal_after_zero) {
        EventSpec<2> early = e, late = e;
        early.accept = [other](double t, const Vec2& p) { return t < 0.0 && p[other] <= 0.0; };
        late.accept = [other](double t, const Vec2& p) { return t >= 0.0 && p[other] <= 0.0; };
        late.terminal = true;
        ev.push_back(std::move(early));
        ev.push_back(std::move(late));
      } else {
        e.accept = [other](double, const Vec2& p) { return p[other] <= 0.0; };
        e.terminal = true;
        ev.push_back(std::move(e));
      }
    }
    // y = 0 with x > 0: the orbit may have slipped through x = 0 and back
    // between two event samples.
    EventSpec<2> g;
    g.id = "graze";
    g.fn = [](double, const Vec2& p) { return p[1]; };
    g.accept = [](double, const Vec2& p) { return p[0] > 0.0; };
    ev.push_back(std::move(g));
    return ev;
  };

  std::optional<ode::Event<2>> best;
  auto consider_traj = [&best](const Trajectory<2>& tr) {
    for (const auto& e : tr.events()) {
      std::optional<ode::Event<2>> c = e;
      if (e.id == "graze") c = grazing_crossing(tr, e);
      if (c && (!best || std::fabs(c->t) < std::fabs(best->t))) best = c;
    }
  };

  const auto fwd = integrate_reduced(sys, ReducedKind::Attractive, p0, tau, hi, axis_events(true, true), opt.ode);
  consider_traj(fwd);
  if (!best || std::fabs(best->t) > std::fabs(tau)) {
    const auto bwd =
        integrate_reduced(sys, ReducedKind::Attractive, p0, tau, lo, axis_events(false, false), opt.ode);
    consider_traj(bwd);
  }
  if (!best) throw NoCrossing("no crossing of R in the time window");

  TildeResult r;
  r.t = best->t;
  r.point = best->state;
  r.corner = std::fabs(r.point[0]) <= opt.corner_tol && std::fabs(r.point[1]) <= opt.corner_tol;
  if (r.corner && chart != nullptr) {
    r.cls = chart->A() * chart->v(p0) > 0.0 ? PointClass::Destabilizing : PointClass::Stabilizing;
  } else {
    r.cls = best->id == "x_axis" ? PointClass::Destabilizing : PointClass::Stabilizing;
  }
  return r;
}

PointClass classify(const SystemSpec& sys, const ReducedGeometry& geom, const Vec2& p0, const Chart* chart,
                    const TildeOptions& opt) {
  return tilde_t(sys, geom, p0, chart, opt).cls;
}

}  // namespace canard
