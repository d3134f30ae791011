#include "canard/integrate.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace canard {

Trajectory<2> integrate_reduced(const SystemSpec& sys, ReducedKind kind, const Vec2& p0, double t0, double t1,
                                const std::vector<EventSpec<2>>& events, const ode::Options& opt) {
  const ode::BranchRhs<2> rhs = [&sys, kind](double, const Vec2& p, int) { return sys.reduced_rhs(kind, p); };
  return ode::integrate<2>(rhs, t0, p0, t1, opt, events);
}

namespace {

// dir = +1 forward, -1 backward in time.
int select_branch(const SystemSpec& sys, const Vec3& s, double dir) {
  if (s[2] > 0.0) return 1;
  if (s[2] < 0.0) return -1;
  // On the kink the side entered next: z' = x / eps decides, then z'' ~ f.
  const double lead = s[0] != 0.0 ? s[0] : sys.f(s);
  return dir * lead > 0.0 ? 1 : -1;
}

}  // namespace

Trajectory<3> integrate_full(const SystemSpec& sys, double eps, const Vec3& s0, double t0, double t1,
                             const std::vector<EventSpec<3>>& events, const FullOptions& opt) {
  if (!(eps > 0.0)) throw InputError("integrate_full: eps must be positive");
  const ode::BranchRhs<3> rhs = [&sys, eps](double, const Vec3& s, int branch) {
    return sys.branch_rhs(eps, branch, s);
  };

  std::vector<ode::Event<3>> kinks;
  ode::Switching<3> sw;
  sw.fn = [](const Vec3& s) { return s[2]; };
  const double run_dir = t1 >= t0 ? 1.0 : -1.0;
  sw.select = [&sys, run_dir](double, const Vec3& s) { return select_branch(sys, s, run_dir); };
  sw.snap_component = 2;
  // Labels follow real time: in a backward run the new branch lies earlier.
  sw.on_switch = [&kinks, run_dir](double t, const Vec3& s, int old_branch, int new_branch) {
    if (old_branch == new_branch) return;
    kinks.push_back({t, (new_branch > 0) == (run_dir > 0) ? kZUp : kZDown, s});
  };

  std::vector<EventSpec<3>> all = events;
  if (opt.stop_on_z_down_after) {
    const double after = *opt.stop_on_z_down_after;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    EventSpec<3> stop;
    stop.id = "stop_z_down";
    stop.fn = [](double, const Vec3& s) { return s[2]; };
    stop.direction = Direction::Down;
    stop.terminal = true;
    stop.accept = [after, dir](double t, const Vec3&) { return dir * (t - after) >= 0.0; };
    all.push_back(std::move(stop));
  }

  ode::Options o = opt.ode;
  o.h_max = std::min(o.h_max, opt.step_factor * eps);
  const double ceiling = opt.z_ceiling;
  auto blow_up = [ceiling](const Vec3& s) { return std::fabs(s[2]) > ceiling; };

  Trajectory<3> raw = ode::integrate<3>(rhs, t0, s0, t1, o, all, sw, blow_up);

  // Merge kink crossings into the event log in run order.
  Trajectory<3> out(t0, s0);
  for (const auto& seg : raw.segments()) out.push(seg);
  std::vector<ode::Event<3>> merged;
  for (const auto& e : raw.events()) {
    if (e.id == "stop_z_down") continue;  // reported as the kZDown kink it coincides with
    merged.push_back(e);
  }
  for (const auto& k : kinks) merged.push_back(k);
  if (raw.status() == Status::TerminalEvent && raw.first_event("stop_z_down") != nullptr) {
    const auto* stop = raw.first_event("stop_z_down");
    const bool already = std::any_of(kinks.begin(), kinks.end(), [&](const ode::Event<3>& k) {
      return k.id == std::string(kZDown) && std::fabs(k.t - stop->t) <= 1e-12 * std::max(1.0, std::fabs(k.t));
    });
    if (!already) merged.push_back({stop->t, kZDown, stop->state});
  }
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  std::stable_sort(merged.begin(), merged.end(),
                   [dir](const ode::Event<3>& a, const ode::Event<3>& b) { return dir * a.t < dir * b.t; });
  for (auto& e : merged) out.log(std::move(e));
  out.finish(raw.status());
  return out;
}

namespace {
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_csv(std::ostream& os, const Trajectory<2>& traj) {
  os << "t,x,y\n";
  for (const auto& [t, p] : traj.points()) os << fmt17(t) << ',' << fmt17(p[0]) << ',' << fmt17(p[1]) << '\n';
}

void write_csv(std::ostream& os, const Trajectory<3>& traj) {
  os << "t,x,y,z\n";
  for (const auto& [t, s] : traj.points())
    os << fmt17(t) << ',' << fmt17(s[0]) << ',' << fmt17(s[1]) << ',' << fmt17(s[2]) << '\n';
}

template <std::size_t N>
std::string events_json(const Trajectory<N>& traj) {
  std::ostringstream os;
  os << '[';
  bool first = true;
  for (const auto& e : traj.events()) {
    if (!first) os << ',';
    first = false;
    os << "{\"t\":" << fmt17(e.t) << ",\"id\":\"" << e.id << "\",\"state\":[";
    for (std::size_t i = 0; i < N; ++i) os << (i ? "," : "") << fmt17(e.state[i]);
    os << "]}";
  }
  os << ']';
  return os.str();
}

template std::string events_json<2>(const Trajectory<2>&);
template std::string events_json<3>(const Trajectory<3>&);

}  // namespace canard
