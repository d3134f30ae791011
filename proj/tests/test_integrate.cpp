#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "canard/errors.hpp"
#include "canard/integrate.hpp"
#include "oracle.hpp"

using namespace canard;

namespace {
const SystemSpec kSys = example_family(3.0);

oracle::Field<2> reduced_field(ReducedKind k) {
  return [k](const Vec2& p) { return kSys.reduced_rhs(k, p); };
}

EventSpec<2> plane_event(const char* id, int comp, Direction d, bool terminal) {
  EventSpec<2> e;
  e.id = id;
  e.fn = [comp](double, const Vec2& p) { return p[comp]; };
  e.direction = d;
  e.terminal = terminal;
  return e;
}
}  // namespace

TEST_CASE("zero timespan returns the initial point only") {
  const auto tr = integrate_reduced(kSys, ReducedKind::Attractive, {0.3, -0.2}, 1.5, 1.5);
  CHECK(tr.segments().empty());
  CHECK(tr.points().size() == 1);
  CHECK(tr.y_end() == Vec2{0.3, -0.2});
  const auto tf = integrate_full(kSys, 0.1, {0.1, 0.2, 0.3}, 0.0, 0.0);
  CHECK(tf.points().size() == 1);
}

TEST_CASE("attractive flow backward from the origin matches the RK4 oracle") {
  // The dwell guard ignores the start on x = 0.
  const auto tr = integrate_reduced(kSys, ReducedKind::Attractive, {0, 0}, 0.0, -20.0,
                                    {plane_event("x0", 0, Direction::Any, true)});
  const auto ref = oracle::crossings<2>(reduced_field(ReducedKind::Attractive), {0, 0}, 0.0, -20.0, 1e-6,
                                        [](const Vec2& p) { return p[0]; }, 1);
  if (ref.empty()) {
    CHECK(tr.status() == Status::Completed);
    CHECK(tr.events().empty());
    const Vec2 end = oracle::rk4<2>(reduced_field(ReducedKind::Attractive), {0, 0}, 0.0, -20.0, 1e-4);
    CHECK(norm(tr.y_end() - end) < 1e-6);
  } else {
    REQUIRE(tr.status() == Status::TerminalEvent);
    CHECK(std::fabs(tr.events().front().t - ref.front().t) < 1e-6);
  }
}

TEST_CASE("attractive flow from a point that returns to x = 0") {
  const Vec2 p0{-0.5, 0.4};
  const auto tr = integrate_reduced(kSys, ReducedKind::Attractive, p0, 0.0, 5.0,
                                    {plane_event("x0", 0, Direction::Any, true)});
  const auto ref = oracle::crossings<2>(reduced_field(ReducedKind::Attractive), p0, 0.0, 5.0, 1e-6,
                                        [](const Vec2& p) { return p[0]; }, 1);
  REQUIRE(ref.size() == 1);
  REQUIRE(tr.status() == Status::TerminalEvent);
  CHECK(std::fabs(tr.events().front().t - ref.front().t) < 1e-6);
  CHECK(std::fabs(tr.events().front().state[0]) < 1e-10);
}

TEST_CASE("repulsive flow forward from the origin: y = 0 crossings match the oracle") {
  const auto tr = integrate_reduced(kSys, ReducedKind::Repulsive, {0, 0}, 0.0, 12.0,
                                    {plane_event("up", 1, Direction::Up, false),
                                     plane_event("down", 1, Direction::Down, false)});
  const auto ref = oracle::crossings<2>(reduced_field(ReducedKind::Repulsive), {0, 0}, 0.0, 12.0, 1e-6,
                                        [](const Vec2& p) { return p[1]; });
  REQUIRE(ref.size() >= 2);
  REQUIRE(tr.events().size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(std::fabs(tr.events()[i].t - ref[i].t) < 1e-6);
    CHECK(tr.events()[i].id == (ref[i].sign > 0 ? "up" : "down"));
    CHECK(std::fabs(tr.events()[i].state[1]) <= 1e-10);
  }
}

TEST_CASE("backward crossing directions follow real time") {
  // Backward repulsive run: y = 0 crossings labelled as seen with t increasing.
  const auto tr = integrate_reduced(kSys, ReducedKind::Repulsive, {-0.5, 0.3}, 0.0, -3.0,
                                    {plane_event("up", 1, Direction::Up, false),
                                     plane_event("down", 1, Direction::Down, false)});
  const auto ref = oracle::crossings<2>(reduced_field(ReducedKind::Repulsive), {-0.5, 0.3}, 0.0, -3.0, 1e-6,
                                        [](const Vec2& p) { return p[1]; });
  REQUIRE(tr.events().size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(std::fabs(tr.events()[i].t - ref[i].t) < 1e-6);
    CHECK(tr.events()[i].id == (ref[i].sign > 0 ? "up" : "down"));
  }
}

TEST_CASE("dense output reproduces the stored step endpoints") {
  const auto tr = integrate_full(kSys, 0.05, {-0.7, 0.2, 0.0}, 0.0, 2.0);
  REQUIRE(!tr.segments().empty());
  double prev = tr.t_start();
  for (const auto& s : tr.segments()) {
    CHECK(s.t1 > s.t0);
    CHECK(s.t0 >= prev);
    prev = s.t1;
    const Vec3 a = s.eval(s.t0), b = s.eval(s.t1);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::fabs(a[i] - s.y0[i]) <= 1e-12 * std::max(1.0, std::fabs(s.y0[i])));
      CHECK(std::fabs(b[i] - s.y1[i]) <= 1e-12 * std::max(1.0, std::fabs(s.y1[i])));
    }
  }
}

TEST_CASE("kink crossings are localised on z = 0") {
  const auto tr = integrate_full(kSys, 0.1, {0.2, -0.3, -0.5}, 0.0, 3.0);
  int kinks = 0;
  for (const auto& e : tr.events()) {
    if (e.id != kZUp && e.id != kZDown) continue;
    ++kinks;
    CHECK(std::fabs(e.state[2]) <= 1e-10);
  }
  CHECK(kinks >= 1);
}

TEST_CASE("backward runs label kinks in real time") {
  // Short window around one kink: backward runs amplify errors like exp(t / eps).
  const auto probe = integrate_full(kSys, 0.1, {0.2, -0.3, -0.5}, 0.0, 3.0);
  const ode::Event<3>* k = nullptr;
  for (const auto& e : probe.events())
    if (e.id == kZUp || e.id == kZDown) {
      k = &e;
      break;
    }
  REQUIRE(k != nullptr);
  const double t0 = k->t - 0.05, t1 = k->t + 0.05;
  const Vec3 y0 = probe.eval(t0), y1 = probe.eval(t1);
  const auto bwd = integrate_full(kSys, 0.1, y1, t1, t0);
  const ode::Event<3>* kb = nullptr;
  for (const auto& e : bwd.events())
    if (e.id == kZUp || e.id == kZDown) kb = &e;
  REQUIRE(kb != nullptr);
  CHECK(kb->id == k->id);
  CHECK(std::fabs(kb->t - k->t) < 1e-6);
  CHECK(norm(bwd.y_end() - y0) < 1e-6);
}

TEST_CASE("full solution matches a fine RK4 run across the kink") {
  const double eps = 0.1;
  const Vec3 s0{-0.3, 0.4, 0.2};
  const auto tr = integrate_full(kSys, eps, s0, 0.0, 1.0);
  REQUIRE(tr.first_event(kZDown) != nullptr);
  REQUIRE(tr.status() == Status::Completed);
  const oracle::Field<3> f = [eps](const Vec3& s) { return kSys.full_rhs(eps, s); };
  const Vec3 ref = oracle::rk4<3>(f, s0, 0.0, 1.0, 1e-6);
  CHECK(norm(tr.y_end() - ref) < 1e-6);
}

TEST_CASE("solution starting on the attractive plane stays within 2 M eps of it") {
  const double eps = 1e-2;
  const double M = check_assumptions(kSys, Box{}, 11).M_est;
  const auto tr = integrate_full(kSys, eps, {-1, 0, -1}, 0.0, 0.1);
  for (const auto& [t, s] : tr.points()) CHECK(std::fabs(s[2] - s[0]) < 2.0 * M * eps);
}

TEST_CASE("z stays above x - M eps from starts on z = 0 with x < 0") {
  const double M = check_assumptions(kSys, Box{}, 11).M_est;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-2.5, -0.05), uy(-1.5, 1.5);
  for (double eps : {0.1, 0.02}) {
    for (int i = 0; i < 10; ++i) {
      const Vec3 s0{ux(rng), uy(rng), 0.0};
      const auto tr = integrate_full(kSys, eps, s0, 0.0, 2.0);
      for (const auto& [t, s] : tr.points()) CHECK(s[2] > s[0] - M * eps);
    }
  }
}

TEST_CASE("property: the set z > -x + M eps is forward invariant") {
  const double M = check_assumptions(kSys, Box{}, 11).M_est;
  const double eps = 0.1;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3, 1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 s0{u(rng), u(rng), u(rng)};
    const auto tr = integrate_full(kSys, eps, s0, 0.0, 3.0);
    bool inside = false;
    for (const auto& [t, s] : tr.points()) {
      const bool now = s[2] > -s[0] + M * eps;
      if (inside) CHECK(now);
      inside = inside || now;
    }
  }
}

TEST_CASE("blow-up is reported with the last state") {
  FullOptions opt;
  opt.z_ceiling = 40.0;
  const auto tr = integrate_full(kSys, 0.05, {0.5, 0.0, 0.5}, 0.0, 10.0, {}, opt);
  CHECK(tr.status() == Status::BlowUp);
  CHECK(std::fabs(tr.y_end()[2]) > 40.0);
}

TEST_CASE("terminal stop on the first downward z crossing after a given time") {
  FullOptions opt;
  opt.stop_on_z_down_after = 0.0;
  const auto tr = integrate_full(kSys, 0.1, {-0.5, 0.5, 0.3}, 0.0, 10.0, {}, opt);
  if (tr.status() == Status::TerminalEvent) {
    CHECK(tr.events().back().id == std::string(kZDown));
    CHECK(std::fabs(tr.y_end()[2]) <= 1e-10);
  }
}

TEST_CASE("fixed-step error drops at fifth order on the frozen branch z < 0") {
  const double eps = 0.1;
  const ode::BranchRhs<3> rhs = [eps](double, const Vec3& s, int) { return kSys.branch_rhs(eps, -1, s); };
  const oracle::Field<3> f = [eps](const Vec3& s) { return kSys.branch_rhs(eps, -1, s); };
  const Vec3 s0{-1.0, 0.3, -1.2};
  const double T = 0.5;
  const Vec3 ref = oracle::rk4<3>(f, s0, 0.0, T, 1e-5);
  double ratio_sum = 0.0;
  int n = 0;
  double prev = -1.0;
  for (double h : {0.04, 0.02, 0.01, 0.005}) {
    ode::Options o;
    o.fixed_step = true;
    o.h_max = h;
    const auto tr = ode::integrate<3>(rhs, 0.0, s0, T, o);
    CHECK(tr.y_end()[2] < 0.0);
    const double err = norm(tr.y_end() - ref);
    if (prev > 0) {
      ratio_sum += prev / err;
      ++n;
    }
    prev = err;
  }
  CHECK(ratio_sum / n >= 16.0);
}

TEST_CASE("event logs are deterministic") {
  auto run = [] {
    EventSpec<3> ev;
    ev.id = "y0";
    ev.fn = [](double, const Vec3& s) { return s[1]; };
    const auto tr = integrate_full(kSys, 0.1, {-0.4, 0.2, 0.0}, 0.0, 6.0, {ev});
    return events_json(tr);
  };
  CHECK(run() == run());
}

TEST_CASE("CSV export uses 17 significant digits") {
  const auto tr = integrate_reduced(kSys, ReducedKind::Attractive, {-0.5, 0.1}, 0.0, 0.1);
  std::ostringstream os;
  write_csv(os, tr);
  const std::string s = os.str();
  CHECK(s.rfind("t,x,y\n", 0) == 0);
  std::istringstream is(s);
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);
  CHECK(line == "0,-0.5,0.10000000000000001");
}

TEST_CASE("non-finite initial state is rejected") {
  CHECK_THROWS_AS(integrate_reduced(kSys, ReducedKind::Attractive, {NAN, 0}, 0.0, 1.0), NumericError);
}
