#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension, event
// localisation on the dense output and an optional switching surface.
//
// Switching surfaces: the right-hand side is evaluated on a frozen branch for
// the whole step. When the switching function changes sign against the
// branch inside an accepted step, the step is redone up to the root, the
// switching component is snapped to zero there and the branch is reselected.
// Every stored segment therefore saw a smooth right-hand side.
//
// Backward runs take negative steps in t, which is the same as stepping the
// negated field forward in s = t0 - t. Segments and events are stored in
// real time, so their times decrease along a backward run.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "canard/errors.hpp"
#include "canard/vec.hpp"

namespace canard::ode {

enum class Direction { Any, Up, Down };  // Up: negative -> positive as t increases

template <std::size_t N>
struct EventSpec {
  std::string id;
  std::function<double(double, const Vec<N>&)> fn;
  Direction direction = Direction::Any;
  bool terminal = false;
  /// Optional filter on the localised root; rejected roots are not logged.
  std::function<bool(double, const Vec<N>&)> accept;
};

template <std::size_t N>
struct Event {
  double t;
  std::string id;
  Vec<N> state;
};

enum class Status { Completed, TerminalEvent, BlowUp };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Completed: return "completed";
    case Status::TerminalEvent: return "terminal_event";
    case Status::BlowUp: return "blow_up";
  }
  return "?";
}

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;  // <= 0: pick automatically
  double h_max = std::numeric_limits<double>::infinity();
  bool fixed_step = false;  // step exactly h_max (clipped at ends/roots), no error control
  long max_steps = 5'000'000;
  double event_tol = 1e-12;  // dwell guard on |phi(t0)| and root acceptance
};

/// One accepted step with its dense-output coefficients.
template <std::size_t N>
struct Segment {
  double t0, t1;
  Vec<N> y0, y1;
  std::array<Vec<N>, 5> rc;

  Vec<N> eval_theta(double th) const {
    const double th1 = 1.0 - th;
    Vec<N> r;
    for (std::size_t i = 0; i < N; ++i)
      r[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
    return r;
  }
  Vec<N> eval(double t) const {
    if (t == t0) return y0;
    if (t == t1) return y1;
    return eval_theta((t - t0) / (t1 - t0));
  }
};

template <std::size_t N>
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, const Vec<N>& y0) : t_start_(t0), t_end_(t0), y_start_(y0), y_end_(y0) {}

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  const Vec<N>& y_start() const { return y_start_; }
  const Vec<N>& y_end() const { return y_end_; }
  bool backward() const { return t_end_ < t_start_; }
  Status status() const { return status_; }
  const std::vector<Segment<N>>& segments() const { return segs_; }
  const std::vector<Event<N>>& events() const { return events_; }

  /// Dense evaluation for t between t_start and t_end (inclusive).
  Vec<N> eval(double t) const {
    if (segs_.empty()) return y_start_;
    const bool bwd = backward();
    // Segments are ordered along the run; find the first whose far end passes t.
    auto it = std::lower_bound(segs_.begin(), segs_.end(), t, [bwd](const Segment<N>& s, double v) {
      return bwd ? s.t1 > v : s.t1 < v;
    });
    if (it == segs_.end()) it = std::prev(segs_.end());
    return it->eval(t);
  }

  /// Accepted-step states (t, y) including the initial point.
  std::vector<std::pair<double, Vec<N>>> points() const {
    std::vector<std::pair<double, Vec<N>>> out;
    out.reserve(segs_.size() + 1);
    out.emplace_back(t_start_, y_start_);
    for (const auto& s : segs_) out.emplace_back(s.t1, s.y1);
    return out;
  }

  const Event<N>* first_event(const std::string& id) const {
    for (const auto& e : events_)
      if (e.id == id) return &e;
    return nullptr;
  }

  // Builder interface used by the integrator.
  void push(const Segment<N>& s) {
    segs_.push_back(s);
    t_end_ = s.t1;
    y_end_ = s.y1;
  }
  void log(Event<N> e) { events_.push_back(std::move(e)); }
  void finish(Status s) { status_ = s; }

 private:
  double t_start_ = 0.0, t_end_ = 0.0;
  Vec<N> y_start_{}, y_end_{};
  std::vector<Segment<N>> segs_;
  std::vector<Event<N>> events_;
  Status status_ = Status::Completed;
};

/// Optional switching surface description for piecewise-smooth fields.
template <std::size_t N>
struct Switching {
  std::function<double(const Vec<N>&)> fn;            // surface where the branch changes
  std::function<int(double, const Vec<N>&)> select;   // branch for a state (on the surface too)
  std::size_t snap_component = N;                     // component set to exactly 0 at a root (N: none)
  std::function<void(double, const Vec<N>&, int, int)> on_switch;  // (t, state, old, new)
};

template <std::size_t N>
using BranchRhs = std::function<Vec<N>(double, const Vec<N>&, int)>;

namespace detail {

struct Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

template <std::size_t N>
struct StepResult {
  Segment<N> seg;
  double err;  // scaled RMS error estimate
};

/// One DP5 step of signed length h (in real time) on a frozen branch.
template <std::size_t N>
StepResult<N> dp5_step(const BranchRhs<N>& rhs, int branch, double t, const Vec<N>& y, const Vec<N>& k1,
                       double h, const Options& opt) {
  using T = Tableau;
  auto axpy = [](const Vec<N>& base, std::initializer_list<std::pair<double, const Vec<N>*>> terms, double hh) {
    Vec<N> r = base;
    for (const auto& [c, v] : terms)
      for (std::size_t i = 0; i < N; ++i) r[i] += hh * c * (*v)[i];
    return r;
  };
  const Vec<N> k2 = rhs(t + T::c2 * h, axpy(y, {{T::a21, &k1}}, h), branch);
  const Vec<N> k3 = rhs(t + T::c3 * h, axpy(y, {{T::a31, &k1}, {T::a32, &k2}}, h), branch);
  const Vec<N> k4 = rhs(t + T::c4 * h, axpy(y, {{T::a41, &k1}, {T::a42, &k2}, {T::a43, &k3}}, h), branch);
  const Vec<N> k5 =
      rhs(t + T::c5 * h, axpy(y, {{T::a51, &k1}, {T::a52, &k2}, {T::a53, &k3}, {T::a54, &k4}}, h), branch);
  const Vec<N> k6 = rhs(
      t + h, axpy(y, {{T::a61, &k1}, {T::a62, &k2}, {T::a63, &k3}, {T::a64, &k4}, {T::a65, &k5}}, h), branch);
  const Vec<N> y1 =
      axpy(y, {{T::a71, &k1}, {T::a73, &k3}, {T::a74, &k4}, {T::a75, &k5}, {T::a76, &k6}}, h);
  const Vec<N> k7 = rhs(t + h, y1, branch);

  StepResult<N> out;
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double e =
        h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] + T::e6 * k6[i] + T::e7 * k7[i]);
    const double sc = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
    acc += (e / sc) * (e / sc);
  }
  out.err = std::sqrt(acc / static_cast<double>(N));

  Segment<N>& s = out.seg;
  s.t0 = t;
  s.t1 = t + h;
  s.y0 = y;
  s.y1 = y1;
  for (std::size_t i = 0; i < N; ++i) {
    const double ydiff = y1[i] - y[i];
    const double bspl = h * k1[i] - ydiff;
    s.rc[0][i] = y[i];
    s.rc[1][i] = ydiff;
    s.rc[2][i] = bspl;
    s.rc[3][i] = ydiff - h * k7[i] - bspl;
    s.rc[4][i] = h * (T::d1 * k1[i] + T::d3 * k3[i] + T::d4 * k4[i] + T::d5 * k5[i] + T::d6 * k6[i] +
                      T::d7 * k7[i]);
  }
  for (double v : y1)
    if (!std::isfinite(v)) out.err = std::numeric_limits<double>::infinity();
  return out;
}

inline int sign_of(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }

/// Bisection for the root of `phi(theta)` on [a, b] with phi(a), phi(b) of opposite sign.
template <class Fn>
double bisect_theta(const Fn& phi, double a, double b, double fa, double time_scale, double time_tol) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if ((b - a) * time_scale <= time_tol || m == a || m == b) break;
    const double fm = phi(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Integrates y' = rhs(t, y, branch) from t0 to t1 (either direction).
/// `blow_up` (optional) aborts with Status::BlowUp after an accepted step.
template <std::size_t N>
Trajectory<N> integrate(const BranchRhs<N>& rhs, double t0, const Vec<N>& y0, double t1, const Options& opt,
                        const std::vector<EventSpec<N>>& events = {},
                        const std::optional<Switching<N>>& sw = std::nullopt,
                        const std::function<bool(const Vec<N>&)>& blow_up = {}) {
  Trajectory<N> traj(t0, y0);
  if (t1 == t0) return traj;
  const double dir = t1 > t0 ? 1.0 : -1.0;

  for (double v : y0)
    if (!std::isfinite(v)) throw NumericError("integrate: non-finite initial state");

  int branch = sw ? sw->select(t0, y0) : 0;
  double t = t0;
  Vec<N> y = y0;
  Vec<N> k1 = rhs(t, y, branch);

  const double span = std::fabs(t1 - t0);
  double h = opt.fixed_step ? opt.h_max : (opt.h_init > 0 ? opt.h_init : std::min(1e-3 * span, 1e-2));
  h = std::min({h, opt.h_max, span});

  // Event bookkeeping: last non-zero sign of each event function.
  std::vector<int> last_sign(events.size());
  for (std::size_t i = 0; i < events.size(); ++i)
    last_sign[i] = detail::sign_of(events[i].fn(t0, y0), opt.event_tol);

  auto time_tol = [](double tt) { return 1e-14 * std::max(1.0, std::fabs(tt)); };
  int stuck = 0;

  for (long step = 0; step < opt.max_steps; ++step) {
    const double remaining = dir * (t1 - t);
    if (remaining <= 0.0) break;
    h = std::min({h, opt.h_max, remaining});
    const double h_min = 1e-14 * std::max(1.0, std::fabs(t));
    if (h < h_min) {
      if (remaining <= h_min) break;  // numerically at t1
      throw IntegrationError("step-size underflow at t=" + std::to_string(t));
    }

    auto res = detail::dp5_step<N>(rhs, branch, t, y, k1, dir * h, opt);
    if (!opt.fixed_step && !(res.err <= 1.0)) {
      if (!std::isfinite(res.err)) {
        h *= 0.2;
      } else {
        h *= std::max(0.2, 0.9 * std::pow(res.err, -0.2));
      }
      continue;
    }
    if (!std::isfinite(res.err) && opt.fixed_step)
      throw NumericError("integrate: non-finite state at t=" + std::to_string(t));
    const double err = res.err;
    Segment<N> seg = res.seg;
    bool switched = false;
    bool flipped = false;

    // Switching surface crossed against the frozen branch?
    if (sw) {
      constexpr int kSamples = 8;
      double th_prev = 0.0;
      double f_prev = sw->fn(seg.y0);
      for (int k = 1; k <= kSamples; ++k) {
        const double th = static_cast<double>(k) / kSamples;
        const double fv = sw->fn(k == kSamples ? seg.y1 : seg.eval_theta(th));
        if (branch * fv < 0.0) {
          const double thc = detail::bisect_theta(
              [&](double x) { return sw->fn(seg.eval_theta(x)); }, th_prev, th, f_prev, h, time_tol(t) * 1e-2);
          const double hc = thc * h;
          if (hc <= time_tol(t)) {
            // Branch was wrong at the start of the step: flip without moving.
            if (++stuck > 4) throw IntegrationError("switching surface chatter at t=" + std::to_string(t));
            const int nb = -branch;
            if (sw->on_switch) sw->on_switch(t, y, branch, nb);
            branch = nb;
            k1 = rhs(t, y, branch);
            flipped = true;
            break;
          }
          auto cut = detail::dp5_step<N>(rhs, branch, t, y, k1, dir * hc, opt);
          seg = cut.seg;
          if (sw->snap_component < N) {
            seg.y1[sw->snap_component] = 0.0;
          }
          switched = true;
          break;
        }
        th_prev = th;
        f_prev = fv;
      }
    }
    if (flipped) continue;
    stuck = 0;

    // User events on the (possibly cut) segment.
    {
      struct Hit {
        double t;
        std::size_t idx;
        Vec<N> state;
        int new_sign;
      };
      std::vector<Hit> hits;
      constexpr int kSamples = 4;
      for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        int sgn = last_sign[i];
        double th_prev = 0.0;
        double f_prev = ev.fn(seg.t0, seg.y0);
        for (int k = 1; k <= kSamples; ++k) {
          const double th = static_cast<double>(k) / kSamples;
          const double tk = seg.t0 + th * (seg.t1 - seg.t0);
          const double fv = ev.fn(tk, k == kSamples ? seg.y1 : seg.eval_theta(th));
          const int s = detail::sign_of(fv, 0.0);
          if (s != 0 && sgn != 0 && s != sgn) {
            // Crossing in (th_prev, th]; f_prev carries the old sign.
            double fa = f_prev;
            if (detail::sign_of(fa, 0.0) != sgn) fa = static_cast<double>(sgn);
            const double thr = detail::bisect_theta(
                [&](double x) { return ev.fn(seg.t0 + x * (seg.t1 - seg.t0), seg.eval_theta(x)); }, th_prev, th,
                fa, h, time_tol(tk));
            const double tr = seg.t0 + thr * (seg.t1 - seg.t0);
            const Vec<N> yr = seg.eval_theta(thr);
            // Orientation in real time: Up means phi increases with t.
            const int before = dir > 0 ? sgn : s;
            const bool dir_ok = ev.direction == Direction::Any ||
                                (ev.direction == Direction::Up && before < 0) ||
                                (ev.direction == Direction::Down && before > 0);
            if (dir_ok && (!ev.accept || ev.accept(tr, yr))) hits.push_back({tr, i, yr, s});
          }
          if (s != 0) sgn = s;
          th_prev = th;
          f_prev = fv;
        }
        last_sign[i] = sgn;
      }
      std::sort(hits.begin(), hits.end(), [dir](const Hit& a, const Hit& b) { return dir * a.t < dir * b.t; });
      for (const Hit& hit : hits) {
        traj.log({hit.t, events[hit.idx].id, hit.state});
        if (events[hit.idx].terminal) {
          const double hc = std::fabs(hit.t - t);
          if (hc > 0.0) {
            auto cut = detail::dp5_step<N>(rhs, branch, t, y, k1, dir * hc, opt);
            seg = cut.seg;
          }
          seg.t1 = hit.t;
          seg.y1 = hit.state;
          traj.push(seg);
          traj.finish(Status::TerminalEvent);
          return traj;
        }
      }
    }

    traj.push(seg);
    t = seg.t1;
    y = seg.y1;
    if (blow_up && blow_up(y)) {
      traj.finish(Status::BlowUp);
      return traj;
    }
    if (switched) {
      const int nb = sw->select(t, y);
      if (sw->on_switch) sw->on_switch(t, y, branch, nb);
      branch = nb;
      k1 = rhs(t, y, branch);
    } else {
      k1 = rhs(t, y, branch);  // FSAL would reuse k7; recomputed for clarity with cut steps
    }
    if (!opt.fixed_step) {
      const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(fac, 0.2, 5.0);
    }
  }
  if (dir * (t1 - t) > 1e-12 * std::max(1.0, std::fabs(t1)))
    throw IntegrationError("maximum number of steps exceeded at t=" + std::to_string(t));
  traj.finish(Status::Completed);
  return traj;
}

}  // namespace canard::ode
