#include "olap/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

namespace olap::expr {

SyntaxError::SyntaxError(std::size_t offset, const std::string& message)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message),
      offset_(offset) {}

DomainError::DomainError(const std::string& subexpression, const std::string& reason)
    : std::runtime_error("domain error in '" + subexpression + "': " + reason),
      subexpression_(subexpression) {}

struct Expression::Node {
  explicit Node(Kind k, double v = 0.0) : kind(k), value(v) {}
  Kind kind;
  double value;
  int var = 0;
  BinaryOp op = BinaryOp::Add;
  Func fn = Func::Sin;
  std::shared_ptr<const Node> a, b;
};

namespace {

constexpr std::array<std::string_view, 7> kFuncNames = {"sin", "cos", "tan", "exp",
                                                        "log", "sqrt", "abs"};

// Binding strength used by the printer; mirrors the grammar levels.
int precedence(const Expression& e) {
  switch (e.kind()) {
    case Expression::Kind::Binary:
      switch (e.op()) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
      return 0;
    case Expression::Kind::Negate: return 3;
    default: return 5;
  }
}

char op_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
  }
  return '?';
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

void print(const Expression& e, std::string& out);

void print_child(const Expression& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Expression& e, std::string& out) {
  switch (e.kind()) {
    case Expression::Kind::Number: out += format_number(e.value()); return;
    case Expression::Kind::Variable: out += static_cast<char>('x' + e.variable_index()); return;
    case Expression::Kind::Pi: out += "pi"; return;
    case Expression::Kind::Negate:
      out += '-';
      print_child(e.lhs(), precedence(e.lhs()) < 3, out);
      return;
    case Expression::Kind::Call:
      out += func_name(e.func());
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
    case Expression::Kind::Binary: {
      const int p = precedence(e);
      if (e.op() == BinaryOp::Pow) {
        print_child(e.lhs(), precedence(e.lhs()) <= 4, out);
        out += '^';
        print_child(e.rhs(), precedence(e.rhs()) < 3, out);
      } else {
        print_child(e.lhs(), precedence(e.lhs()) < p, out);
        out += ' ';
        out += op_char(e.op());
        out += ' ';
        print_child(e.rhs(), precedence(e.rhs()) <= p, out);
      }
      return;
    }
  }
}

double checked(double v, const Expression& e, const char* reason) {
  if (!std::isfinite(v)) throw DomainError(e.to_string(), reason);
  return v;
}

double eval(const Expression& e, const Vec3& p) {
  switch (e.kind()) {
    case Expression::Kind::Number: return e.value();
    case Expression::Kind::Variable: return p[e.variable_index()];
    case Expression::Kind::Pi: return std::numbers::pi;
    case Expression::Kind::Negate: return -eval(e.lhs(), p);
    case Expression::Kind::Binary: {
      const double a = eval(e.lhs(), p);
      const double b = eval(e.rhs(), p);
      switch (e.op()) {
        case BinaryOp::Add: return checked(a + b, e, "overflow");
        case BinaryOp::Sub: return checked(a - b, e, "overflow");
        case BinaryOp::Mul: return checked(a * b, e, "overflow");
        case BinaryOp::Div:
          if (b == 0.0) throw DomainError(e.to_string(), "division by zero");
          return checked(a / b, e, "overflow");
        case BinaryOp::Pow: return checked(std::pow(a, b), e, "non-finite power");
      }
      return 0.0;
    }
    case Expression::Kind::Call: {
      const double a = eval(e.lhs(), p);
      switch (e.func()) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Tan: return checked(std::tan(a), e, "non-finite tangent");
        case Func::Exp: return checked(std::exp(a), e, "overflow");
        case Func::Log:
          if (a <= 0.0) throw DomainError(e.to_string(), "log of non-positive value");
          return std::log(a);
        case Func::Sqrt:
          if (a < 0.0) throw DomainError(e.to_string(), "sqrt of negative value");
          return std::sqrt(a);
        case Func::Abs: return std::abs(a);
      }
      return 0.0;
    }
  }
  return 0.0;
}

}  // namespace

std::string_view func_name(Func fn) { return kFuncNames[static_cast<std::size_t>(fn)]; }

Expression Expression::number(double value) {
  if (!std::isfinite(value) || value < 0.0)
    throw std::invalid_argument("expression literals must be finite and non-negative");
  return Expression(std::make_shared<const Node>(Node(Kind::Number, value)));
}

Expression Expression::variable(char name) {
  if (name < 'x' || name > 'z') throw std::invalid_argument("variables are x, y, z");
  Node n(Kind::Variable);
  n.var = name - 'x';
  return Expression(std::make_shared<const Node>(std::move(n)));
}

Expression Expression::pi() { return Expression(std::make_shared<const Node>(Node(Kind::Pi))); }

Expression Expression::negate(Expression operand) {
  Node n(Kind::Negate);
  n.a = std::move(operand.node_);
  return Expression(std::make_shared<const Node>(std::move(n)));
}

Expression Expression::binary(BinaryOp op, Expression lhs, Expression rhs) {
  Node n(Kind::Binary);
  n.op = op;
  n.a = std::move(lhs.node_);
  n.b = std::move(rhs.node_);
  return Expression(std::make_shared<const Node>(std::move(n)));
}

Expression Expression::call(Func fn, Expression arg) {
  Node n(Kind::Call);
  n.fn = fn;
  n.a = std::move(arg.node_);
  return Expression(std::make_shared<const Node>(std::move(n)));
}

Expression::Kind Expression::kind() const { return node_->kind; }
double Expression::value() const { return node_->value; }
int Expression::variable_index() const { return node_->var; }
BinaryOp Expression::op() const { return node_->op; }
Func Expression::func() const { return node_->fn; }
Expression Expression::lhs() const { return Expression(node_->a); }
Expression Expression::rhs() const { return Expression(node_->b); }

double Expression::evaluate(const Vec3& point) const { return eval(*this, point); }

std::string Expression::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case Expression::Kind::Number: return x.value == y.value;
    case Expression::Kind::Variable: return x.var == y.var;
    case Expression::Kind::Pi: return true;
    case Expression::Kind::Negate: return a.lhs() == b.lhs();
    case Expression::Kind::Call: return x.fn == y.fn && a.lhs() == b.lhs();
    case Expression::Kind::Binary: return x.op == y.op && a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expression parse_all() {
    Expression e = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) {
      if (src_[pos_] == ')') fail("unbalanced parenthesis");
      fail(std::string("unexpected token '") + src_[pos_] + "'");
    }
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(pos_, msg); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression parse_expr() {
    Expression lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = Expression::binary(BinaryOp::Add, lhs, parse_term());
      else if (accept('-')) lhs = Expression::binary(BinaryOp::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  Expression parse_term() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = Expression::binary(BinaryOp::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = Expression::binary(BinaryOp::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  Expression parse_unary() {
    if (accept('-')) return Expression::negate(parse_unary());
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (accept('^')) return Expression::binary(BinaryOp::Pow, base, parse_unary());
    return base;
  }

  Expression parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      const std::size_t open = pos_;
      ++pos_;
      Expression inner = parse_expr();
      if (!accept(')')) {
        pos_ = open;
        fail("unbalanced parenthesis");
      }
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail(std::string("unexpected token '") + c + "'");
  }

  Expression parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(value)) {
      pos_ = start;
      fail("malformed number");
    }
    return Expression::number(value);
  }

  Expression parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x" || name == "y" || name == "z") return Expression::variable(name[0]);
    if (name == "pi") return Expression::pi();
    for (std::size_t i = 0; i < kFuncNames.size(); ++i) {
      if (name != kFuncNames[i]) continue;
      if (!accept('(')) fail("expected '(' after function name");
      const std::size_t open = pos_ - 1;
      Expression arg = parse_expr();
      if (!accept(')')) {
        pos_ = open;
        fail("unbalanced parenthesis");
      }
      return Expression::call(static_cast<Func>(i), arg);
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

Expression parse(std::string_view source) { return Parser(source).parse_all(); }

}  // namespace olap::expr
