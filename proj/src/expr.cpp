#include "canard/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>

#include "canard/errors.hpp"

namespace canard::expr {

namespace {

template <class T>
NodePtr make_node(T v) {
  return std::make_shared<const Node>(Node{std::move(v)});
}

constexpr std::string_view unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Sqrt: return "sqrt";
  }
  return "?";
}

constexpr char binary_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
  }
  return '?';
}

std::optional<UnaryOp> function_named(std::string_view name) {
  if (name == "abs") return UnaryOp::Abs;
  if (name == "sin") return UnaryOp::Sin;
  if (name == "cos") return UnaryOp::Cos;
  if (name == "exp") return UnaryOp::Exp;
  if (name == "sqrt") return UnaryOp::Sqrt;
  return std::nullopt;
}

double apply_unary(UnaryOp op, double a) {
  switch (op) {
    case UnaryOp::Neg: return -a;
    case UnaryOp::Abs: return std::fabs(a);
    case UnaryOp::Sin: return std::sin(a);
    case UnaryOp::Cos: return std::cos(a);
    case UnaryOp::Exp: return std::exp(a);
    case UnaryOp::Sqrt:
      if (a < 0.0) throw NumericError("domain error: sqrt of negative value");
      return std::sqrt(a);
  }
  return 0.0;
}

double power(double base, double exponent) {
  if (base < 0.0 && std::trunc(exponent) != exponent)
    throw NumericError("domain error: negative base raised to non-integer power");
  return std::pow(base, exponent);
}

double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Pow: return power(a, b);
  }
  return 0.0;
}

double checked(double v) {
  if (!std::isfinite(v)) throw NumericError("numeric overflow: non-finite result");
  return v;
}

// ---------------------------------------------------------------------------
// Tokenizer + Pratt parser

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> params) : text_(text), params_(params) {
    advance();
  }

  Expression parse_all() {
    if (current_.kind == Tok::End) throw ParseError("empty expression", current_.offset);
    NodePtr root = parse_expr(0);
    if (current_.kind != Tok::End) throw ParseError("unexpected '" + std::string(current_.text) + "'", current_.offset);
    return Expression(root);
  }

 private:
  static constexpr int kUnaryBp = 30;

  static int left_bp(Tok t) {
    switch (t) {
      case Tok::Plus:
      case Tok::Minus: return 10;
      case Tok::Star:
      case Tok::Slash: return 20;
      case Tok::Caret: return 40;
      default: return -1;
    }
  }

  NodePtr parse_expr(int min_bp) {
    NodePtr lhs = parse_prefix();
    for (;;) {
      const Tok op = current_.kind;
      const int lbp = left_bp(op);
      if (lbp < 0 || lbp <= min_bp) break;
      advance();
      // Right-associative ^ recurses with a slightly lower binding power.
      const int rbp = op == Tok::Caret ? lbp - 1 : lbp;
      NodePtr rhs = parse_expr(rbp);
      lhs = make_node(Binary{to_binary(op), std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  static BinaryOp to_binary(Tok t) {
    switch (t) {
      case Tok::Plus: return BinaryOp::Add;
      case Tok::Minus: return BinaryOp::Sub;
      case Tok::Star: return BinaryOp::Mul;
      case Tok::Slash: return BinaryOp::Div;
      default: return BinaryOp::Pow;
    }
  }

  NodePtr parse_prefix() {
    const Token tok = current_;
    switch (tok.kind) {
      case Tok::Number:
        advance();
        return make_node(Number{tok.number});
      case Tok::Minus:
        advance();
        return make_node(Unary{UnaryOp::Neg, parse_expr(kUnaryBp)});
      case Tok::LParen: {
        advance();
        NodePtr inner = parse_expr(0);
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        advance();
        if (auto fn = function_named(tok.text)) {
          if (current_.kind != Tok::LParen)
            throw ParseError("expected '(' after function '" + std::string(tok.text) + "'", current_.offset);
          advance();
          NodePtr arg = parse_expr(0);
          expect(Tok::RParen, "')'");
          return make_node(Unary{*fn, std::move(arg)});
        }
        if (!is_known_variable(tok.text)) throw UnknownIdentifier(std::string(tok.text), tok.offset);
        return make_node(Variable{std::string(tok.text)});
      }
      case Tok::End: throw ParseError("unexpected end of input", tok.offset);
      default: throw ParseError("unexpected '" + std::string(tok.text) + "'", tok.offset);
    }
  }

  bool is_known_variable(std::string_view name) const {
    if (name == "x" || name == "y" || name == "z") return true;
    return std::find(params_.begin(), params_.end(), name) != params_.end();
  }

  void expect(Tok kind, const char* what) {
    if (current_.kind != kind) throw ParseError(std::string("expected ") + what, current_.offset);
    advance();
  }

  void advance() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) {
      current_ = {Tok::End, start, {}};
      return;
    }
    const char c = text_[pos_];
    auto single = [&](Tok k) {
      ++pos_;
      current_ = {k, start, text_.substr(start, 1)};
    };
    switch (c) {
      case '+': return single(Tok::Plus);
      case '-': return single(Tok::Minus);
      case '*': return single(Tok::Star);
      case '/': return single(Tok::Slash);
      case '^': return single(Tok::Caret);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      default: break;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      std::size_t end = pos_;
      while (end < text_.size() && ((text_[end] >= '0' && text_[end] <= '9') || text_[end] == '.')) ++end;
      if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
        std::size_t e = end + 1;
        if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
        if (e < text_.size() && text_[e] >= '0' && text_[e] <= '9') {
          while (e < text_.size() && text_[e] >= '0' && text_[e] <= '9') ++e;
          end = e;
        }
      }
      double value = 0.0;
      const char* first = text_.data() + pos_;
      const char* last = text_.data() + end;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
      pos_ = end;
      current_ = {Tok::Number, start, text_.substr(start, end - start), value};
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_ + 1;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
        ++end;
      pos_ = end;
      current_ = {Tok::Ident, start, text_.substr(start, end - start)};
      return;
    }
    throw ParseError("unexpected character", start);
  }

  std::string_view text_;
  std::span<const std::string> params_;
  std::size_t pos_ = 0;
  Token current_{Tok::End, 0, {}};
};

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print(const Node& n, std::string& out) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Number>) {
          if (v.value < 0.0 || std::signbit(v.value)) {
            out += "(-" + format_number(-v.value) + ")";
          } else {
            out += format_number(v.value);
          }
        } else if constexpr (std::is_same_v<T, Variable>) {
          out += v.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          if (v.op == UnaryOp::Neg) {
            out += "(-";
            print(*v.arg, out);
            out += ")";
          } else {
            out += unary_name(v.op);
            out += "(";
            print(*v.arg, out);
            out += ")";
          }
        } else {
          out += "(";
          print(*v.lhs, out);
          out += ' ';
          out += binary_symbol(v.op);
          out += ' ';
          print(*v.rhs, out);
          out += ")";
        }
      },
      n.value);
}

bool same(const Node& a, const Node& b) {
  if (a.value.index() != b.value.index()) return false;
  return std::visit(
      [&](const auto& va) -> bool {
        using T = std::decay_t<decltype(va)>;
        const auto& vb = std::get<T>(b.value);
        if constexpr (std::is_same_v<T, Number>) {
          return va.value == vb.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return va.name == vb.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return va.op == vb.op && same(*va.arg, *vb.arg);
        } else {
          return va.op == vb.op && same(*va.lhs, *vb.lhs) && same(*va.rhs, *vb.rhs);
        }
      },
      a.value);
}

void collect(const Node& n, std::vector<std::string>& names) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Variable>) {
          if (std::find(names.begin(), names.end(), v.name) == names.end()) names.push_back(v.name);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect(*v.arg, names);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect(*v.lhs, names);
          collect(*v.rhs, names);
        }
      },
      n.value);
}

double eval_node(const Node& n, const Bindings& b) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Number>) {
          return v.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          auto it = b.find(v.name);
          if (it == b.end()) throw MissingBinding("missing binding for '" + v.name + "'");
          return it->second;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return apply_unary(v.op, eval_node(*v.arg, b));
        } else {
          const double lhs = eval_node(*v.lhs, b);
          return apply_binary(v.op, lhs, eval_node(*v.rhs, b));
        }
      },
      n.value);
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  if (root_) print(*root_, out);
  return out;
}

std::vector<std::string> Expression::variables() const {
  std::vector<std::string> names;
  if (root_) collect(*root_, names);
  return names;
}

bool operator==(const Expression& a, const Expression& b) {
  if (!a.root_ || !b.root_) return a.root_ == b.root_;
  return same(*a.root_, *b.root_);
}

Expression number(double v) { return Expression(make_node(Number{v})); }
Expression variable(std::string name) { return Expression(make_node(Variable{std::move(name)})); }
Expression unary(UnaryOp op, const Expression& arg) {
  return Expression(make_node(Unary{op, std::make_shared<const Node>(arg.root())}));
}
Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs) {
  return Expression(make_node(
      Binary{op, std::make_shared<const Node>(lhs.root()), std::make_shared<const Node>(rhs.root())}));
}

Expression parse(std::string_view text, std::span<const std::string> param_names) {
  return Parser(text, param_names).parse_all();
}

double evaluate(const Expression& e, const Bindings& bindings) {
  if (e.empty()) throw InputError("evaluate: empty expression");
  return checked(eval_node(e.root(), bindings));
}

// ---------------------------------------------------------------------------

Compiled Compiled::compile(const Expression& e, std::span<const std::string> slots) {
  if (e.empty()) throw InputError("compile: empty expression");
  Compiled c;
  c.emit(e.root(), slots, 1);
  return c;
}

void Compiled::emit(const Node& n, std::span<const std::string> slots, int depth) {
  max_depth_ = std::max(max_depth_, depth);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Number>) {
          code_.push_back({Op::Const, 0, v.value});
        } else if constexpr (std::is_same_v<T, Variable>) {
          auto it = std::find(slots.begin(), slots.end(), v.name);
          if (it == slots.end()) throw MissingBinding("missing binding for '" + v.name + "'");
          code_.push_back({Op::Load, static_cast<std::uint32_t>(it - slots.begin()), 0.0});
        } else if constexpr (std::is_same_v<T, Unary>) {
          emit(*v.arg, slots, depth);
          static constexpr Op map[] = {Op::Neg, Op::Abs, Op::Sin, Op::Cos, Op::Exp, Op::Sqrt};
          code_.push_back({map[static_cast<int>(v.op)], 0, 0.0});
        } else {
          emit(*v.lhs, slots, depth);
          emit(*v.rhs, slots, depth + 1);
          static constexpr Op map[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
          code_.push_back({map[static_cast<int>(v.op)], 0, 0.0});
        }
      },
      n.value);
}

double Compiled::operator()(std::span<const double> values) const {
  // Expressions in configs are tiny; a fixed stack avoids heap traffic.
  constexpr int kStack = 64;
  if (max_depth_ > kStack) throw InputError("expression nested too deeply");
  double stack[kStack];
  int sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: stack[sp++] = in.value; break;
      case Op::Load: stack[sp++] = values[in.slot]; break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
      case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::Sqrt: stack[sp - 1] = apply_unary(UnaryOp::Sqrt, stack[sp - 1]); break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::Pow: --sp; stack[sp - 1] = power(stack[sp - 1], stack[sp]); break;
    }
  }
  return checked(stack[0]);
}

}  // namespace canard::expr
