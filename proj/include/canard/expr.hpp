#pragma once

// Scalar arithmetic expressions for the slow right-hand sides f and g.
//
// Grammar (loosest to tightest):  + -   then  * /   then  unary -   then  ^
// `^` is right-associative, everything else left-associative. Functions
// abs, sin, cos, exp, sqrt take one parenthesised argument.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace canard::expr {

enum class UnaryOp : std::uint8_t { Neg, Abs, Sin, Cos, Exp, Sqrt };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  double value;
};
struct Variable {
  std::string name;
};
struct Unary {
  UnaryOp op;
  NodePtr arg;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};

struct Node {
  std::variant<Number, Variable, Unary, Binary> value;
};

using Bindings = std::map<std::string, double, std::less<>>;

/// Immutable expression tree. Copies share nodes.
class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  const Node& root() const { return *root_; }
  bool empty() const { return root_ == nullptr; }

  /// Fully parenthesised text that parses back to the same tree.
  std::string to_string() const;

  /// Distinct variable names in first-occurrence order.
  std::vector<std::string> variables() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  NodePtr root_;
};

// Tree builders, mostly for tests.
Expression number(double v);
Expression variable(std::string name);
Expression unary(UnaryOp op, const Expression& arg);
Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs);

/// Parses `text`. Identifiers must be x, y, z or one of `param_names`.
/// Throws ParseError (with byte offset) or UnknownIdentifier.
Expression parse(std::string_view text, std::span<const std::string> param_names = {});

/// Tree-walking evaluation. Throws MissingBinding for unbound variables and
/// NumericError for domain errors or non-finite results.
double evaluate(const Expression& e, const Bindings& bindings);

/// Flattened postfix form with variables resolved to slot indices. This is
/// what the integrators call in their inner loops.
class Compiled {
 public:
  Compiled() = default;

  /// Every variable of `e` must appear in `slots` (MissingBinding otherwise).
  static Compiled compile(const Expression& e, std::span<const std::string> slots);

  double operator()(std::span<const double> values) const;

 private:
  enum class Op : std::uint8_t { Const, Load, Neg, Abs, Sin, Cos, Exp, Sqrt, Add, Sub, Mul, Div, Pow };
  struct Instr {
    Op op;
    std::uint32_t slot;
    double value;
  };
  void emit(const Node& n, std::span<const std::string> slots, int depth);

  std::vector<Instr> code_;
  int max_depth_ = 0;
};

}  // namespace canard::expr
