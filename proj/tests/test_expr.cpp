#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "canard/errors.hpp"
#include "canard/expr.hpp"

using namespace canard;
using namespace canard::expr;

namespace {
const std::vector<std::string> kA{"a"};

double eval(const std::string& text, const Bindings& b = {{"x", 0}, {"y", 0}, {"z", 0}},
            const std::vector<std::string>& params = {}) {
  return evaluate(parse(text, params), b);
}

std::size_t error_offset(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.offset();
  }
  FAIL("expected a parse error for '" << text << "'");
  return 0;
}
}  // namespace

TEST_CASE("parse builds the example slow field with unary minus binding tighter than *") {
  const Expression e = parse("-a*y + z/a", kA);
  const Expression want = binary(BinaryOp::Add,
                                 binary(BinaryOp::Mul, unary(UnaryOp::Neg, variable("a")), variable("y")),
                                 binary(BinaryOp::Div, variable("z"), variable("a")));
  CHECK(e == want);
}

TEST_CASE("parse of a lone variable") { CHECK(parse("x") == variable("x")); }

TEST_CASE("syntax errors carry the exact byte offset") {
  CHECK(error_offset("x + * y") == 4);
  CHECK(error_offset("") == 0);
  CHECK(error_offset("(x + y") == 6);
  CHECK(error_offset("x y") == 2);
  CHECK(error_offset("2 $ 3") == 2);
  CHECK(error_offset("sin x") == 4);
}

TEST_CASE("unknown identifiers are named") {
  try {
    parse("x + b*y", kA);
    FAIL("no error");
  } catch (const UnknownIdentifier& e) {
    CHECK(e.name() == "b");
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("precedence and associativity fixtures") {
  CHECK(eval("2+3*4") == 14.0);
  CHECK(eval("2^3^2") == 512.0);
  CHECK(eval("-2^2") == -4.0);
  CHECK(eval("2^-1") == 0.5);
  CHECK(eval("8/4/2") == 1.0);
  CHECK(eval("8-4-2") == 2.0);
  CHECK(eval("(2+3)*4") == 20.0);
  CHECK(eval("1.5e-3*1e3") == doctest::Approx(1.5));
  CHECK(eval("  2 *\t( 1 + 1 )\n") == 4.0);
}

TEST_CASE("evaluate matches direct arithmetic") {
  CHECK(evaluate(parse("-a*y + z/a", kA), {{"a", 3}, {"x", 0}, {"y", 1}, {"z", 0}}) == -3.0);
  CHECK(evaluate(parse("x + 1"), {{"x", 0}, {"y", 0}, {"z", 0}}) == 1.0);
  CHECK(evaluate(parse("abs(z)"), {{"x", 0}, {"y", 0}, {"z", -2}}) == 2.0);
  CHECK(eval("sqrt(4) + exp(0) + cos(0) + sin(0)") == 4.0);
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(evaluate(parse("x + y"), {{"x", 1}}), MissingBinding);
  CHECK_THROWS_AS(eval("1/0"), NumericError);
  CHECK_THROWS_AS(eval("exp(1000)"), NumericError);
  // Negative base with fractional exponent is rejected at evaluation, not parse.
  const Expression e = parse("(0-2)^0.5");
  CHECK_THROWS_AS(evaluate(e, {}), NumericError);
  CHECK(eval("(0-2)^3") == -8.0);
  CHECK_THROWS_AS(eval("sqrt(0-1)"), NumericError);
}

TEST_CASE("compiled form agrees bit-for-bit with tree evaluation") {
  const std::vector<std::string> slots{"x", "y", "z", "a"};
  const Expression e = parse("-a*y + z/a + abs(x)^2 - sin(y)*exp(z/10)", kA);
  const Compiled c = Compiled::compile(e, slots);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 200; ++i) {
    const double v[4] = {u(rng), u(rng), u(rng), 3.0};
    const double tree = evaluate(e, {{"x", v[0]}, {"y", v[1]}, {"z", v[2]}, {"a", v[3]}});
    CHECK(c(v) == tree);
    CHECK(c(v) == c(v));
  }
  CHECK_THROWS_AS(Compiled::compile(parse("x*q", std::vector<std::string>{"q"}), slots), MissingBinding);
}

namespace {
// Random well-formed expression text over x, y, z, a.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  const int k = depth <= 0 ? pick(rng) % 3 : pick(rng);
  static const char* vars[] = {"x", "y", "z", "a"};
  static const char* ops[] = {" + ", " - ", "*", "/", "^"};
  static const char* fns[] = {"abs", "sin", "cos", "exp", "sqrt"};
  switch (k) {
    case 0: return vars[rng() % 4];
    case 1: {
      std::uniform_real_distribution<double> u(0, 100);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", u(rng));
      return buf;
    }
    case 2: return std::string(vars[rng() % 4]);
    case 3: return "-" + random_expr(rng, depth - 1);
    case 4: return std::string(fns[rng() % 5]) + "(" + random_expr(rng, depth - 1) + ")";
    case 5: return "(" + random_expr(rng, depth - 1) + ")";
    default: return random_expr(rng, depth - 1) + ops[rng() % 5] + random_expr(rng, depth - 1);
  }
}
}  // namespace

TEST_CASE("property: pretty-print reparses to a structurally identical tree") {
  std::mt19937_64 rng(12345);
  for (int i = 0; i < 500; ++i) {
    const std::string text = random_expr(rng, 5);
    const Expression e = parse(text, kA);
    const std::string printed = e.to_string();
    INFO(text << "  ->  " << printed);
    CHECK(parse(printed, kA) == e);
  }
}

TEST_CASE("variables lists each name once") {
  const auto v = parse("x*y + x/a - z", kA).variables();
  CHECK(v == std::vector<std::string>{"x", "y", "a", "z"});
}
