#include <doctest.h>

#include <cmath>
#include <random>

#include "canard/errors.hpp"
#include "canard/system.hpp"

using namespace canard;

TEST_CASE("full right-hand side of the example family") {
  const SystemSpec sys = example_family(3.0);
  Vec3 r = sys.full_rhs(0.1, {0, 0, 0});
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 0.0);
  r = sys.full_rhs(0.1, {-1, 0, 0});
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == doctest::Approx(-10.0).epsilon(1e-14));
  r = sys.full_rhs(0.1, {0, 0, -1});
  CHECK(r[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(r[1] == 1.0);
  CHECK(r[2] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(sys.full_rhs(0.0, {0, 0, 0}), InputError);
}

TEST_CASE("reduced right-hand sides") {
  const SystemSpec sys = example_family(3.0);
  Vec2 r = sys.reduced_rhs(ReducedKind::Attractive, {-1, 0});
  CHECK(r[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(r[1] == 0.0);
  r = sys.reduced_rhs(ReducedKind::Repulsive, {-1, 0});
  CHECK(r[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r[1] == 0.0);
}

TEST_CASE("property: reduced fields agree with the full field on their planes") {
  const SystemSpec sys = example_family(2.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 1);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng), y = u(rng);
    const Vec2 ra = sys.reduced_rhs(ReducedKind::Attractive, {x, y});
    const Vec2 rr = sys.reduced_rhs(ReducedKind::Repulsive, {x, y});
    const Vec3 fa = sys.full_rhs(0.1, {x, y, x});
    const Vec3 fr = sys.full_rhs(0.1, {x, y, -x});
    CHECK(ra[0] == fa[0]);
    CHECK(ra[1] == fa[1]);
    CHECK(rr[0] == fr[0]);
    CHECK(rr[1] == fr[1]);
    // On x <= 0 the attractive plane z = x lies on the slow surface.
    if (x <= 0) CHECK(fa[2] == 0.0);
    const Vec2 a0 = sys.reduced_rhs(ReducedKind::Attractive, {0.0, y});
    const Vec2 r0 = sys.reduced_rhs(ReducedKind::Repulsive, {0.0, y});
    CHECK(a0 == r0);
  }
}

TEST_CASE("assumption check passes for the example family") {
  const AssumptionReport rep = check_assumptions(example_family(3.0), Box{}, 21);
  CHECK(rep.pass);
  CHECK(rep.f_origin == 0.0);
  CHECK(rep.g_origin == 1.0);
  CHECK(rep.sign_condition_ok);
  CHECK(rep.lambda_est > 0.0);
}

TEST_CASE("assumption check fails for a constant field") {
  const AssumptionReport rep = check_assumptions(SystemSpec("1", "1", {}), Box{}, 5);
  CHECK_FALSE(rep.pass);
  CHECK(rep.f_origin == 1.0);
}

TEST_CASE("assumption check flags a wrong-sign slow field") {
  const AssumptionReport rep = check_assumptions(SystemSpec("y", "1", {}), Box{}, 5);
  CHECK_FALSE(rep.sign_condition_ok);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("M estimate is within 10% of a dense sampling maximum") {
  const SystemSpec sys = example_family(3.0);
  const Box box;
  double dense = 0.0;
  const int n = 100;  // 10^6 points
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 p{box.lo[0] + (box.hi[0] - box.lo[0]) * (i + 0.5) / n,
                     box.lo[1] + (box.hi[1] - box.lo[1]) * (j + 0.5) / n,
                     box.lo[2] + (box.hi[2] - box.lo[2]) * (k + 0.5) / n};
        dense = std::max({dense, std::fabs(sys.f(p)), std::fabs(sys.g(p))});
      }
  const AssumptionReport rep = check_assumptions(sys, box, 11);
  CHECK(std::fabs(rep.M_est - dense) <= 0.1 * dense);
  CHECK(rep.M_est >= dense * 0.999);
}

TEST_CASE("lambda estimate bounds the difference quotient of a linear field") {
  // f = 2x - y, g = 1: |F(p) - F(q)| / |p - q| <= sqrt(5)
  const AssumptionReport rep = check_assumptions(SystemSpec("2*x - y", "1", {}), Box{}, 11);
  CHECK(rep.lambda_est <= std::sqrt(5.0) + 1e-12);
  CHECK(rep.lambda_est >= 0.8 * std::sqrt(5.0));
}

TEST_CASE("with_param rebinds a parameter") {
  const SystemSpec s = example_family(3.0).with_param("a", 2.0);
  CHECK(s.f({0, 1, 0}) == -2.0);
}
