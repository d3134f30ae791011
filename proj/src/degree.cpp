#include "canard/degree.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "canard/parallel.hpp"

namespace canard {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Tally {
  double total = 0.0;
  double max_inc = 0.0;
  double min_mag = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
  bool exhausted = false;
};

template <class S>
struct Refinement {
  std::vector<S> points;  // strictly between the two ends, in loop order
  bool fresh = false;     // the new pieces restart the depth count
};

// Accumulates the increments from a to b, refining recursively.
template <class S, class Refine>
void walk(const S& a, const S& b, int depth, const WindingOptions& opt, Tally& t, Refine& refine) {
  const double inc = angle_increment(a.field, b.field);
  if (std::fabs(inc) < opt.max_increment) {
    t.total += inc;
    t.max_inc = std::max(t.max_inc, std::fabs(inc));
    return;
  }
  Refinement<S> r;
  if (depth < opt.max_depth) r = refine(a, b, depth);
  if (r.points.empty()) {
    t.exhausted = true;
    t.total += inc;
    t.max_inc = std::max(t.max_inc, std::fabs(inc));
    return;
  }
  for (const auto& p : r.points) {
    const double m = norm(p.field);
    t.min_mag = std::min(t.min_mag, m);
    ++t.samples;
    if (!(m > opt.tol_zero)) throw ZeroOnBoundary("field vanishes on the loop");
  }
  const int next = r.fresh ? 0 : depth + 1;
  walk(a, r.points.front(), next, opt, t, refine);
  for (std::size_t i = 0; i + 1 < r.points.size(); ++i) walk(r.points[i], r.points[i + 1], next, opt, t, refine);
  walk(r.points.back(), b, next, opt, t, refine);
}

template <class S, class Refine>
Tally walk_loop(const std::vector<S>& samples, const WindingOptions& opt, Refine& refine) {
  Tally t;
  for (const auto& s : samples) {
    const double m = norm(s.field);
    t.min_mag = std::min(t.min_mag, m);
    if (!(m > opt.tol_zero)) throw ZeroOnBoundary("field vanishes on the loop");
  }
  t.samples = samples.empty() ? 0 : samples.size() - 1;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) walk(samples[i], samples[i + 1], 0, opt, t, refine);
  return t;
}

int round_winding(const Tally& t, const WindingOptions& opt, bool& certified) {
  const double w = t.total / kTwoPi;
  const double r = std::round(w);
  certified = !t.exhausted && std::fabs(w - r) <= opt.integer_tol;
  if (!certified && !opt.allow_uncertified) {
    std::ostringstream os;
    os << "cannot certify the winding: total / 2 pi = " << w;
    if (t.exhausted) os << " with increments >= " << opt.max_increment << " after " << opt.max_depth << " refinements";
    throw RefinementExhausted(os.str());
  }
  return static_cast<int>(r);
}

struct PlainSample {
  double t;
  Vec2 field;
};

}  // namespace

WindingResult winding(const LoopField& loop, const WindingOptions& opt) {
  if (loop.knots.size() < 3) throw InputError("a loop needs at least three knots");
  std::size_t evals = 0;
  auto eval = [&](double t) {
    ++evals;
    return PlainSample{t, loop.field(t)};
  };
  std::vector<PlainSample> samples;
  samples.reserve(loop.knots.size());
  for (double k : loop.knots) samples.push_back(eval(k));
  auto refine = [&](const PlainSample& a, const PlainSample& b, int) {
    Refinement<PlainSample> r;
    r.points.push_back(eval(0.5 * (a.t + b.t)));
    return r;
  };
  const Tally t = walk_loop(samples, opt, refine);
  WindingResult res;
  res.winding = round_winding(t, opt, res.certified);
  res.total_angle = t.total;
  res.n_evals = evals;
  res.n_samples = t.samples;
  res.min_magnitude = t.min_mag;
  res.max_increment = t.max_inc;
  return res;
}

std::vector<double> square_knots(int n) {
  if (n < 1) throw InputError("need at least one sample per side");
  std::vector<double> k;
  for (int i = 0; i <= 4 * n; ++i) k.push_back(static_cast<double>(i) / n);
  return k;
}

Vec2 square_point(double half, double t) {
  t = std::fmod(t, 4.0);
  if (t < 0.0) t += 4.0;
  const int side = std::min(3, static_cast<int>(t));
  const double l = 2.0 * half * (t - side);
  switch (side) {
    case 0: return {-half + l, -half};
    case 1: return {half, -half + l};
    case 2: return {half - l, half};
    default: return {-half, half - l};
  }
}

namespace {

enum class Kind { Regular, Bridge };

struct WSample {
  Kind kind = Kind::Regular;
  int side = 0;
  double lam = 0.0;  // position along the side in [0, 1]
  double s = 0.0;    // drop time (bridge samples)
  int bridge = -1;
  Vec2 p{};
  Vec2 field{};
  MapCase cs = MapCase::Case1;
};

struct Bridge {
  int side = 0;
  ShootOptions shoot;
  std::map<double, Vec3> sols;  // s -> (arc position, drop x, drop y)
  std::size_t evals = 0;
  std::size_t samples = 0;
};

class Walker {
 public:
  Walker(const CanardMap& map, const UVRect& rect, const DegreeOptions& opt)
      : map_(map), opt_(opt), alpha_(map.alpha()), sigma_(map.geometry().sigma) {
    corners_ = {ChartPoint{rect.u0, rect.v0}, ChartPoint{rect.u1, rect.v0}, ChartPoint{rect.u1, rect.v1},
                ChartPoint{rect.u0, rect.v1}};
  }

  ChartPoint uv(int side, double lam) const {
    const ChartPoint& a = corners_[side];
    const ChartPoint& b = corners_[(side + 1) % 4];
    return {a.u + lam * (b.u - a.u), a.v + lam * (b.v - a.v)};
  }

  double side_length(int side) const {
    const ChartPoint& a = corners_[side];
    const ChartPoint& b = corners_[(side + 1) % 4];
    return std::hypot(b.u - a.u, b.v - a.v);
  }

  std::vector<WSample> initial() {
    const int n = opt_.n0;
    std::vector<WSample> out;
    Vec2 seed = map_.chart().linear_inverse(uv(0, 0.0));
    for (int side = 0; side < 4; ++side) {
      for (int j = 0; j < n; ++j) {
        WSample s;
        s.side = side;
        s.lam = static_cast<double>(j) / n;
        s.p = map_.chart().inverse(uv(side, s.lam), seed);
        seed = s.p;
        out.push_back(s);
      }
    }
    parallel_for(out.size(), opt_.threads, [&](std::size_t i) { evaluate_regular(out[i]); });
    evals_ += out.size();
    WSample close = out.front();
    close.side = 3;
    close.lam = 1.0;
    out.push_back(close);
    return out;
  }

  Refinement<WSample> operator()(const WSample& a, const WSample& b, int depth) {
    Refinement<WSample> r;
    if (a.kind == Kind::Bridge && b.kind == Kind::Bridge && a.bridge == b.bridge) {
      if (auto m = bridge_sample(a.bridge, 0.5 * (a.s + b.s))) r.points.push_back(*m);
      return r;
    }
    const double lb = b.side == a.side ? b.lam : 1.0;
    WSample m;
    m.side = a.side;
    m.lam = 0.5 * (a.lam + lb);
    m.p = map_.chart().inverse(uv(m.side, m.lam), 0.5 * (a.p + b.p));
    evaluate_regular(m);
    ++evals_;
    const bool jump = a.kind == Kind::Regular && b.kind == Kind::Regular &&
                      ((a.cs == MapCase::Case3 && b.cs == MapCase::Case4) ||
                       (a.cs == MapCase::Case4 && b.cs == MapCase::Case3));
    const bool inside_band = m.cs == MapCase::Case1 || m.cs == MapCase::Case2;
    if (opt_.bridge && jump && (inside_band || depth + 1 >= opt_.winding.max_depth)) {
      if (auto br = make_bridge(a, lb)) return *br;
    }
    r.points.push_back(m);
    return r;
  }

  std::size_t evals() const { return evals_; }
  std::size_t shoot_evals() const { return shoot_evals_; }

  std::vector<BridgeInfo> bridge_info() const {
    std::vector<BridgeInfo> out;
    for (const auto& b : bridges_) {
      BridgeInfo info;
      info.side = b.side;
      const double L = side_length(b.side);
      info.lo = uv(b.side, b.sols.begin()->second[0] / L);
      info.hi = uv(b.side, b.sols.rbegin()->second[0] / L);
      info.samples = b.samples;
      info.shoot_evals = b.evals;
      out.push_back(info);
    }
    return out;
  }

 private:
  void evaluate_regular(WSample& s) const {
    const MapResult m = map_.W(s.p);
    s.field = s.p - m.image;
    s.cs = m.case_tag;
  }

  std::optional<Vec3> solve_bridge(Bridge& br, double s, const Vec3& seed) {
    const SystemSpec& sys = map_.system();
    const ReducedGeometry& g = map_.geometry();
    const double L = side_length(br.side);
    Vec2 pseed = map_.chart().inverse(uv(br.side, seed[0] / L));
    auto residual = [&](const Vec3& x) {
      const Vec2 p0 = map_.chart().inverse(uv(br.side, x[0] / L), pseed);
      ++br.evals;
      ++shoot_evals_;
      return match_defect(sys, map_.eps(), p0, g.tau, {x[1], x[2]}, s, br.shoot);
    };
    NewtonResult nr;
    try {
      nr = newton3(residual, seed, opt_.newton);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!nr.converged) return std::nullopt;
    br.sols[s] = nr.x;
    return nr.x;
  }

  // Interpolated solution; the drop point is carried along the reduced curve.
  Vec3 nearest_seed(const Bridge& br, double s) const {
    const ReducedGeometry& g = map_.geometry();
    auto shifted = [&](double s0, const Vec3& x) {
      const Vec2 d = g.w_r(s) - g.w_r(s0);
      return Vec3{x[0], x[1] + d[0], x[2] + d[1]};
    };
    auto hi = br.sols.lower_bound(s);
    if (hi == br.sols.end()) return shifted(std::prev(hi)->first, std::prev(hi)->second);
    if (hi == br.sols.begin()) return shifted(hi->first, hi->second);
    auto lo = std::prev(hi);
    const double w = (s - lo->first) / (hi->first - lo->first);
    return (1.0 - w) * shifted(lo->first, lo->second) + w * shifted(hi->first, hi->second);
  }

  // Continuation from the nearest solved drop time, shortening failed steps.
  bool continue_to(Bridge& br, double target) {
    for (int halvings = 0; halvings <= 5;) {
      if (br.sols.count(target)) return true;
      auto it = br.sols.lower_bound(target);
      const double from = it == br.sols.end() ? std::prev(it)->first
                          : it == br.sols.begin() ? it->first
                          : (target - std::prev(it)->first < it->first - target ? std::prev(it)->first : it->first);
      const double step = (target - from) / static_cast<double>(1 << halvings);
      const double s = from + step;
      if (solve_bridge(br, s, nearest_seed(br, s))) {
        halvings = 0;
      } else {
        ++halvings;
      }
    }
    return false;
  }

  WSample field_at(int id, double s, const Vec3& sol) {
    const Bridge& br = bridges_[id];
    WSample w;
    w.kind = Kind::Bridge;
    w.side = br.side;
    w.lam = sol[0] / side_length(br.side);
    w.s = s;
    w.bridge = id;
    w.p = map_.chart().inverse(uv(br.side, w.lam));
    w.cs = case_of(s, sigma_, alpha_);
    w.field = w.p - map_.image_for(s, {sol[1], sol[2]});
    ++evals_;
    ++bridges_[id].samples;
    return w;
  }

  std::optional<WSample> bridge_sample(int id, double s) {
    Bridge& br = bridges_[id];
    const auto sol = solve_bridge(br, s, nearest_seed(br, s));
    if (!sol) return std::nullopt;
    return field_at(id, s, *sol);
  }

  // Replaces the jump between a and b by boundary points parameterized by
  // their drop time, solved by two-sided shooting.
  std::optional<Refinement<WSample>> make_bridge(const WSample& a, double b_lam) {
    const ReducedGeometry& g = map_.geometry();
    const double L = side_length(a.side);
    Bridge br;
    br.side = a.side;
    br.shoot = opt_.shoot;
    bridges_.push_back(br);
    const int id = static_cast<int>(bridges_.size()) - 1;
    Bridge& me = bridges_.back();

    const double lmid = 0.5 * (a.lam + b_lam);
    const Vec2 w = g.w_r(sigma_);
    const auto first = solve_bridge(me, sigma_, {lmid * L, w[0], w[1]});
    if (!first) return fail();
    // Match where this orbit crosses z = 0 near the fold: both halves stay
    // on the sheet that is stable in their direction of integration.
    try {
      const Vec2 p0 = map_.chart().inverse(uv(me.side, (*first)[0] / L));
      const auto tz = first_z_up(shoot_halves(map_.system(), map_.eps(), p0, g.tau, {(*first)[1], (*first)[2]},
                                              sigma_, me.shoot));
      if (tz && *tz > g.tau && *tz < sigma_) {
        me.shoot.t_match = *tz;
        me.sols.clear();
        if (!solve_bridge(me, sigma_, *first)) return fail();
      }
    } catch (const DomainError&) {
      return fail();
    }
    for (double sign : {1.0, -1.0})
      for (double d : {alpha_, 2.0 * alpha_})
        if (!continue_to(me, sigma_ + sign * d)) return fail();
    // Both band edges must lie strictly inside the gap.
    const double lo = std::min(a.lam, b_lam), hi = std::max(a.lam, b_lam);
    for (const auto& kv : me.sols) {
      const double l = kv.second[0] / L;
      if (!(l > lo && l < hi)) return fail();
    }
    const bool ascending = a.cs == MapCase::Case4;
    Refinement<WSample> r;
    r.fresh = true;
    std::vector<double> order;
    for (const auto& kv : me.sols) order.push_back(kv.first);
    order.erase(std::remove_if(order.begin(), order.end(),
                               [&](double s) { return std::fabs(s - sigma_) > 2.0 * alpha_ + 1e-12; }),
                order.end());
    if (!ascending) std::reverse(order.begin(), order.end());
    for (double s : order) r.points.push_back(field_at(id, s, me.sols.at(s)));
    return r;
  }

  std::nullopt_t fail() {
    bridges_.pop_back();
    return std::nullopt;
  }

  const CanardMap& map_;
  const DegreeOptions& opt_;
  double alpha_, sigma_;
  std::array<ChartPoint, 4> corners_{};
  std::deque<Bridge> bridges_;
  std::size_t evals_ = 0;
  std::size_t shoot_evals_ = 0;
};

}  // namespace

DegreeReport degree_W(const CanardMap& map, const DegreeOptions& opt) {
  return degree_W(map, full_rect(map.alpha()), opt);
}

DegreeReport degree_W(const CanardMap& map, const UVRect& rect, const DegreeOptions& opt) {
  if (opt.n0 < 2) throw InputError("n0 must be at least 2");
  if (!(rect.u1 > rect.u0 && rect.v1 > rect.v0)) throw InputError("empty rectangle");
  Walker w(map, rect, opt);
  const std::vector<WSample> samples = w.initial();
  const Tally t = walk_loop(samples, opt.winding, w);
  DegreeReport rep;
  rep.rect = rect;
  rep.winding_uv = round_winding(t, opt.winding, rep.certified);
  rep.orientation = map.chart().orientation();
  rep.degree = rep.winding_uv * rep.orientation;
  rep.total_angle = t.total;
  rep.n_evals = w.evals();
  rep.shoot_evals = w.shoot_evals();
  rep.min_field_magnitude = t.min_mag;
  rep.max_increment = t.max_inc;
  rep.bridges = w.bridge_info();
  return rep;
}

}  // namespace canard
