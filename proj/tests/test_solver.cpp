#include <doctest.h>

#include <cmath>
#include <memory>

#include "canard/errors.hpp"
#include "canard/solver.hpp"
#include "oracle.hpp"

using namespace canard;

namespace {

const SystemSpec& sys3() {
  static const SystemSpec s = example_family(3.0);
  return s;
}

std::shared_ptr<const ReducedGeometry> geom3() {
  static const auto g = std::make_shared<const ReducedGeometry>(compute_geometry(sys3()));
  return g;
}

CanardMap make_map(double eps) {
  MapParams p;
  p.eps = eps;
  return CanardMap(sys3(), geom3(), p);
}

const CanardResult& canard_01() {
  static const CanardResult r = find_fixed_point(make_map(0.1));
  return r;
}

}  // namespace

TEST_CASE("periodic canard at a = 3, eps = 0.1") {
  const CanardResult& r = canard_01();
  const ReducedGeometry& g = *geom3();
  CHECK(r.method == "two-sided shooting");
  CHECK(r.case_tag == MapCase::Case1);
  CHECK(r.inside);
  CHECK(r.closure_error <= 1e-6);
  CHECK(r.period == doctest::Approx(r.s - g.tau));
  CHECK(r.deviation == doctest::Approx(r.period - (g.sigma - g.tau)));
  CHECK(std::fabs(r.s - g.sigma) < 0.1);
  CHECK(r.fixed_point[0] < 0.0);
  CHECK(std::fabs(r.fixed_point[1]) < 1e-9);
  CHECK(r.tilde < 0.0);
  CHECK(r.tilde > g.tau);
}

TEST_CASE("orbit starts and ends on the section at the fixed point") {
  const CanardResult& r = canard_01();
  const ReducedGeometry& g = *geom3();
  REQUIRE(r.orbit.size() > 100);
  CHECK(r.orbit.front().t == g.tau);
  CHECK(r.orbit.back().t == r.s);
  CHECK(norm(r.orbit.front().state - Vec3{r.fixed_point[0], r.fixed_point[1], 0.0}) < 1e-12);
  CHECK(norm(r.orbit.back().state - Vec3{r.fixed_point[0], r.fixed_point[1], 0.0}) < 1e-12);
  for (std::size_t i = 1; i < r.orbit.size(); ++i) CHECK(r.orbit[i].t > r.orbit[i - 1].t);
}

TEST_CASE("junction agrees with independent RK4 halves") {
  const CanardResult& r = canard_01();
  const ReducedGeometry& g = *geom3();
  const oracle::Field<3> f = [](const Vec3& s) { return sys3().full_rhs(0.1, s); };
  const Vec3 start{r.fixed_point[0], r.fixed_point[1], 0.0};
  const Vec3 fwd = oracle::rk4<3>(f, start, g.tau, r.t_match, 1e-5);
  const Vec3 bwd = oracle::rk4<3>(f, start, r.s, r.t_match, 1e-5);
  CHECK(norm(fwd - bwd) < 1e-6);
}

TEST_CASE("slow segments adhere to the slow planes outside the layers") {
  const CanardResult& r = canard_01();
  const Adherence& a = r.adherence;
  CHECK(a.layer == doctest::Approx(5 * 0.1 * std::fabs(std::log(0.1))));
  CHECK(a.repul_samples > 0);
  CHECK(a.max_attr <= a.bound);
  CHECK(a.max_repul <= a.bound);
  CHECK(a.ok);
  // Same check straight from the orbit.
  for (const auto& o : r.orbit) {
    if (o.t >= a.attr_from && o.t <= a.attr_to) CHECK(std::fabs(o.state[2] - o.state[0]) <= a.bound);
    if (o.t >= a.repul_from && o.t <= a.repul_to) CHECK(std::fabs(o.state[2] + o.state[0]) <= a.bound);
  }
}

TEST_CASE("degree check before solving") {
  SolverOptions o;
  o.check_degree = true;
  const CanardResult r = find_fixed_point(make_map(0.1), o);
  REQUIRE(r.degree.has_value());
  CHECK(r.degree->degree == 1);
  // At eps = 0.2 the canard band lies outside the parallelogram.
  CHECK_THROWS_AS(find_fixed_point(make_map(0.2), o), DegreeZero);
}

TEST_CASE("an orbit outside the parallelogram is reported only on request") {
  const CanardMap W = make_map(0.2);
  SolverOptions o;
  o.broyden_fallback = false;
  o.subdivision_fallback = false;
  CHECK_THROWS_AS(find_fixed_point(W, o), NoConvergence);
  o.allow_outside = true;
  const CanardResult r = find_fixed_point(W, o);
  CHECK_FALSE(r.inside);
  CHECK(r.closure_error < 1e-9);
}

TEST_CASE("no stage enabled means no convergence") {
  SolverOptions o;
  o.two_sided = false;
  o.broyden_fallback = false;
  o.subdivision_fallback = false;
  CHECK_THROWS_AS(find_fixed_point(make_map(0.1), o), NoConvergence);
}

TEST_CASE("period sweep") {
  const auto rows = period_sweep(sys3(), geom3(), MapParams{}, {0.1, 0.05, 0.025});
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    REQUIRE(row.ok);
    CHECK(row.result->case_tag == MapCase::Case1);
    CHECK(row.result->inside);
    CHECK(row.result->closure_error < 1e-6);
  }
  CHECK(rows[0].eps == 0.1);
  CHECK(rows[0].result->s == doctest::Approx(canard_01().s).epsilon(1e-9));
  CHECK(std::fabs(rows[2].result->deviation) < 0.1 * (geom3()->sigma - geom3()->tau));
  CHECK_THROWS_AS(period_sweep(sys3(), geom3(), MapParams{}, {0.05, 0.1}), InputError);
  CHECK_THROWS_AS(period_sweep(sys3(), geom3(), MapParams{}, {}), InputError);
}

TEST_CASE("fixed point approaches (x*, y*) as eps decreases") {
  SolverOptions o;
  o.allow_outside = true;  // at eps = 0.2 it lies outside the parallelogram
  double prev_uv = 1e9, prev_d = 1e9;
  for (double eps : {0.2, 0.1, 0.05}) {
    const CanardResult r = find_fixed_point(make_map(eps), o);
    const double uv = std::max(std::fabs(r.uv.u), std::fabs(r.uv.v));
    const double d = norm(r.fixed_point - geom3()->star());
    CHECK(uv < prev_uv);
    CHECK(d < prev_d);
    CHECK(std::fabs(r.deviation) <= make_map(eps).alpha() + make_map(eps).rho());
    prev_uv = uv;
    prev_d = d;
  }
}

TEST_CASE("single-entry sweep equals find_fixed_point") {
  MapParams base;
  const auto rows = period_sweep(sys3(), geom3(), base, {0.1});
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].ok);
  CHECK(rows[0].result->s == canard_01().s);
  CHECK(rows[0].result->fixed_point[0] == canard_01().fixed_point[0]);
}

TEST_CASE("sweep rows record failures") {
  const auto rows = period_sweep(sys3(), geom3(), MapParams{}, {0.1, -1.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK_FALSE(rows[1].ok);
  CHECK_FALSE(rows[1].error.empty());
}

TEST_CASE("subdivision homes in on the zero of a linear field") {
  const Vec2 zero{0.0123, -0.0456};
  auto deg = [&](const UVRect& r) {
    const double hu = 0.5 * (r.u1 - r.u0), hv = 0.5 * (r.v1 - r.v0);
    const ChartPoint c = r.center();
    const LoopField loop{square_knots(2), [&](double t) {
                           const Vec2 q = square_point(1.0, t);
                           const Vec2 p{c.u + hu * q[0], c.v + hv * q[1]};
                           return Vec2{p[0] - zero[0], 3.0 * (p[1] - zero[1])};
                         }};
    return winding(loop).winding;
  };
  const auto s = subdivide({-0.1, 0.1, -0.1, 0.1}, deg, 1e-6, 2);
  REQUIRE(s.has_value());
  CHECK(s->rect.diameter() < 1e-6);
  CHECK(s->rect.contains({zero[0], zero[1]}));
  CHECK(s->levels > 10);
  CHECK_FALSE(subdivide({0.1, 0.2, 0.1, 0.2}, deg, 1e-6).has_value());
}

TEST_CASE("a0 threshold") {
  const double a0 = find_a0(sys3(), "a", 1.5, 3.0, 1e-3);
  CHECK(a0 > 1.85);
  CHECK(a0 < 1.95);
  CHECK_THROWS_AS(find_a0(sys3(), "a", 2.0, 3.0, 1e-3), BadBracket);
  CHECK(std::fabs(compute_geometry(sys3().with_param("a", a0 + 0.05)).A) > 0.0);
  CHECK_THROWS_AS(compute_geometry(sys3().with_param("a", a0 - 0.05)), NoIntersection);
  CHECK_THROWS_AS(find_a0(sys3(), "a", 3.0, 1.5, 1e-3), InputError);
}

TEST_CASE("eps = 1 fails gracefully") {
  try {
    find_fixed_point(make_map(1.0));
    FAIL("expected a failure");
  } catch (const NoConvergence& e) {
    CHECK(std::string(e.what()).find("no fixed point") != std::string::npos);
  } catch (const DegreeZero&) {
  }
}
