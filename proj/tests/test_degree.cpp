#include <doctest.h>

#include <cmath>
#include <numbers>

#include "canard/degree.hpp"
#include "canard/errors.hpp"
#include "canard/solver.hpp"

using namespace canard;

namespace {

constexpr double kPi = std::numbers::pi;

LoopField square_field(double half, int n, std::function<Vec2(const Vec2&)> f) {
  return {square_knots(n), [half, f](double t) { return f(square_point(half, t)); }};
}

// Oracle: continuous angle of the field along a very fine uniform sampling.
double unwrapped_turns(double half, const std::function<Vec2(const Vec2&)>& f, int n = 40000) {
  double total = 0.0;
  Vec2 prev = f(square_point(half, 0.0));
  for (int i = 1; i <= n; ++i) {
    const Vec2 cur = f(square_point(half, 4.0 * i / n));
    double d = std::atan2(cur[1], cur[0]) - std::atan2(prev[1], prev[0]);
    while (d > kPi) d -= 2 * kPi;
    while (d <= -kPi) d += 2 * kPi;
    total += d;
    prev = cur;
  }
  return total / (2 * kPi);
}

const auto lin_pos = [](const Vec2& p) { return Vec2{p[0], 5 * p[1]}; };
const auto lin_neg = [](const Vec2& p) { return Vec2{-p[0], 5 * p[1]}; };
const auto constant = [](const Vec2&) { return Vec2{1.0, -2.0}; };
const auto square_z = [](const Vec2& p) { return Vec2{p[0] * p[0] - p[1] * p[1], 2 * p[0] * p[1]}; };
const auto conj_shift = [](const Vec2& p) { return Vec2{p[0] - 0.3, -(p[1] + 0.2)}; };

}  // namespace

TEST_CASE("angle increment") {
  CHECK(angle_increment({1, 0}, {0, 1}) == doctest::Approx(kPi / 2));
  CHECK(angle_increment({0, 1}, {1, 0}) == doctest::Approx(-kPi / 2));
  CHECK(angle_increment({1, 0}, {-1, 0}) == doctest::Approx(kPi));
  CHECK(angle_increment({2, 2}, {1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("square parameterization is counter-clockwise and closed") {
  const double h = 0.5;
  CHECK(norm(square_point(h, 0.0) - Vec2{-h, -h}) == 0.0);
  CHECK(norm(square_point(h, 1.0) - Vec2{h, -h}) < 1e-15);
  CHECK(norm(square_point(h, 2.0) - Vec2{h, h}) < 1e-15);
  CHECK(norm(square_point(h, 3.0) - Vec2{-h, h}) < 1e-15);
  CHECK(norm(square_point(h, 4.0) - square_point(h, 0.0)) < 1e-15);
  const auto k = square_knots(8);
  CHECK(k.size() == 33);
  CHECK(k.front() == 0.0);
  CHECK(k.back() == 4.0);
}

TEST_CASE("linear and constant fields") {
  for (int n : {1, 4, 16}) {
    const auto pos = winding(square_field(1.0, n, lin_pos));
    CHECK(pos.winding == 1);
    CHECK(pos.certified);
    CHECK(pos.max_increment < kPi / 2);
    CHECK(winding(square_field(1.0, n, lin_neg)).winding == -1);
    const auto c = winding(square_field(1.0, n, constant));
    CHECK(c.winding == 0);
    CHECK(c.total_angle == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("agrees with the fine unwrapping oracle") {
  for (const auto& f : {std::function<Vec2(const Vec2&)>(lin_pos), std::function<Vec2(const Vec2&)>(lin_neg),
                        std::function<Vec2(const Vec2&)>(constant), std::function<Vec2(const Vec2&)>(square_z),
                        std::function<Vec2(const Vec2&)>(conj_shift)}) {
    const auto r = winding(square_field(1.0, 8, f));
    const double turns = unwrapped_turns(1.0, f);
    CHECK(r.winding == static_cast<int>(std::lround(turns)));
    CHECK(r.total_angle / (2 * kPi) == doctest::Approx(turns).epsilon(1e-9));
  }
  CHECK(winding(square_field(1.0, 8, square_z)).winding == 2);
  CHECK(winding(square_field(1.0, 8, conj_shift)).winding == -1);
}

TEST_CASE("reversing the orientation negates the winding") {
  for (const auto& f : {std::function<Vec2(const Vec2&)>(lin_pos), std::function<Vec2(const Vec2&)>(square_z)}) {
    const LoopField fwd = square_field(1.0, 8, f);
    const LoopField rev{fwd.knots, [f](double t) { return f(square_point(1.0, 4.0 - t)); }};
    CHECK(winding(rev).winding == -winding(fwd).winding);
  }
}

TEST_CASE("doubling the sample density leaves the winding unchanged") {
  for (const auto& f : {std::function<Vec2(const Vec2&)>(lin_pos), std::function<Vec2(const Vec2&)>(lin_neg),
                        std::function<Vec2(const Vec2&)>(constant), std::function<Vec2(const Vec2&)>(square_z)}) {
    int last = 0;
    for (int n : {2, 4, 8, 16, 32}) {
      const auto r = winding(square_field(1.0, n, f));
      if (n > 2) CHECK(r.winding == last);
      CHECK(r.certified);
      last = r.winding;
    }
  }
}

TEST_CASE("zero on the loop and exhausted refinement") {
  CHECK_THROWS_AS(winding(square_field(1.0, 4, [](const Vec2& p) { return Vec2{p[0] - 1.0, p[1]}; })),
                  ZeroOnBoundary);
  // Spins at a rate incommensurate with the knots; depth 2 cannot follow it.
  const LoopField fast{square_knots(1), [](double t) { return Vec2{std::cos(1e4 * t), std::sin(1e4 * t)}; }};
  WindingOptions o;
  o.max_depth = 2;
  CHECK_THROWS_AS(winding(fast, o), RefinementExhausted);
  o.allow_uncertified = true;
  CHECK_FALSE(winding(fast, o).certified);
}

TEST_CASE("degree of id - W equals sgn A") {
  for (double a : {2.0, 3.0}) {
    const SystemSpec sys = example_family(a);
    auto g = std::make_shared<const ReducedGeometry>(compute_geometry(sys));
    MapParams p;
    p.eps = 0.1;
    const CanardMap W(sys, g, p);
    const DegreeReport r = degree_W(W);
    CHECK(r.certified);
    CHECK(r.max_increment < kPi / 2);
    CHECK(r.orientation == (g->A > 0 ? 1 : -1));
    CHECK(r.degree == r.orientation);
    CHECK(r.degree == r.winding_uv * r.orientation);
  }
}

TEST_CASE("rectangle degree: around the canard and away from it") {
  const SystemSpec sys = example_family(3.0);
  auto g = std::make_shared<const ReducedGeometry>(compute_geometry(sys));
  MapParams p;
  p.eps = 0.1;
  const CanardMap W(sys, g, p);
  const CanardResult fp = find_fixed_point(W);
  DegreeOptions o;
  o.n0 = 16;
  const double h = 0.1 * W.alpha();
  const UVRect around{fp.uv.u - h, fp.uv.u + h, fp.uv.v - h, fp.uv.v + h};
  CHECK(degree_W(W, around, o).degree == 1);
  const double q = 0.5 * W.alpha();
  const UVRect below{-q, q, -q, -0.5 * q};
  const DegreeReport r = degree_W(W, below, o);
  CHECK(r.certified);
  CHECK(r.degree == 0);
}
