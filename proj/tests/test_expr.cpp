#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "olap/expr.hpp"

using olap::Vec3;
using namespace olap::expr;

namespace {

Expression X() { return Expression::variable('x'); }
Expression Y() { return Expression::variable('y'); }
Expression Z() { return Expression::variable('z'); }
Expression N(double v) { return Expression::number(v); }
Expression add(Expression a, Expression b) { return Expression::binary(BinaryOp::Add, a, b); }
Expression sub(Expression a, Expression b) { return Expression::binary(BinaryOp::Sub, a, b); }
Expression mul(Expression a, Expression b) { return Expression::binary(BinaryOp::Mul, a, b); }
Expression dvd(Expression a, Expression b) { return Expression::binary(BinaryOp::Div, a, b); }
Expression pw(Expression a, Expression b) { return Expression::binary(BinaryOp::Pow, a, b); }
Expression fn(Func f, Expression a) { return Expression::call(f, a); }

Expression random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 7);
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> v(0.0, 100.0);
      return N(v(rng));
    }
    case 1:
      return Expression::variable(static_cast<char>('x' + std::uniform_int_distribution<int>(0, 2)(rng)));
    case 2:
      return Expression::pi();
    case 3:
      return Expression::negate(random_tree(rng, depth - 1));
    case 4:
    case 5:
    case 6: {
      const auto op = static_cast<BinaryOp>(std::uniform_int_distribution<int>(0, 4)(rng));
      return Expression::binary(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    }
    default: {
      const auto f = static_cast<Func>(std::uniform_int_distribution<int>(0, 6)(rng));
      return Expression::call(f, random_tree(rng, depth - 1));
    }
  }
}

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(parse("x+y*z") == add(X(), mul(Y(), Z())));
  CHECK(parse("2^3^2").evaluate({0.3, -1, 4}) == 512.0);
  CHECK(parse("-x^2") == Expression::negate(pw(X(), N(2))));
  CHECK(parse("x - y - z") == sub(sub(X(), Y()), Z()));
  CHECK(parse("x / y * z") == mul(dvd(X(), Y()), Z()));
  CHECK(parse("2^-1").evaluate({}) == 0.5);
  CHECK(parse("  sin ( x )\t+\n1 ") == add(fn(Func::Sin, X()), N(1)));
  CHECK(parse("1.5e-3").evaluate({}) == 1.5e-3);
}

TEST_CASE("syntax errors carry offsets") {
  auto offset_of = [](const char* s) -> long {
    try {
      parse(s);
    } catch (const SyntaxError& e) {
      return static_cast<long>(e.offset());
    }
    return -1;
  };
  CHECK(offset_of("x + * y") == 4);
  CHECK(offset_of("(x + y") == 0);  // the unmatched opener
  CHECK(offset_of("x + y)") == 5);
  CHECK(offset_of("x + w") == 4);
  CHECK(offset_of("sinx") == 0);
  CHECK(offset_of("") == 0);
  CHECK(offset_of("sin x") == 4);
  try {
    parse("x + * y");
  } catch (const SyntaxError& e) {
    CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
  }
}

TEST_CASE("evaluation") {
  CHECK(parse("cos(0)").evaluate({1, 2, 3}) == 1.0);
  CHECK(parse("x*y").evaluate({2, 3, 7}) == 6.0);
  CHECK(parse("sin(pi/2)").evaluate({}) == 1.0);
  CHECK(parse("abs(-3)").evaluate({}) == 3.0);
  CHECK(parse("sqrt(z)").evaluate({0, 0, 16}) == 4.0);
}

TEST_CASE("domain errors name the subexpression") {
  CHECK_THROWS_AS(parse("log(x)").evaluate({0, 0, 0}), DomainError);
  CHECK_THROWS_AS(parse("sqrt(x-1)").evaluate({0, 0, 0}), DomainError);
  CHECK_THROWS_AS(parse("1/(x-y)").evaluate({2, 2, 0}), DomainError);
  try {
    parse("y + log(x*0)").evaluate({1, 1, 1});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.subexpression() == "log(x * 0)");
  }
}

TEST_CASE("printing round-trips for random trees") {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 1000; ++i) {
    const Expression e = random_tree(rng, 6);
    const std::string printed = e.to_string();
    const Expression back = parse(printed);
    CHECK(back == e);
    CHECK(back.to_string() == printed);
  }
}

TEST_CASE("regression corpus evaluates bit-exactly against hand-built trees") {
  const Vec3 p{0.37, -1.25, 2.5};
  const Expression pi = Expression::pi();
  struct Case {
    const char* src;
    Expression tree;
  };
  const std::vector<Case> corpus = {
      {"x+y*z", add(X(), mul(Y(), Z()))},
      {"sin(x)*cos(y)", mul(fn(Func::Sin, X()), fn(Func::Cos, Y()))},
      {"exp(-x^2)", fn(Func::Exp, Expression::negate(pw(X(), N(2))))},
      {"sqrt(x^2+y^2+z^2)", fn(Func::Sqrt, add(add(pw(X(), N(2)), pw(Y(), N(2))), pw(Z(), N(2))))},
      {"log(1+z)", fn(Func::Log, add(N(1), Z()))},
      {"tan(x/3)", fn(Func::Tan, dvd(X(), N(3)))},
      {"abs(y)^1.5", pw(fn(Func::Abs, Y()), N(1.5))},
      {"sin(pi*x)*sin(pi*y)*sin(pi*z)",
       mul(mul(fn(Func::Sin, mul(pi, X())), fn(Func::Sin, mul(pi, Y()))), fn(Func::Sin, mul(pi, Z())))},
      {"2^3^0.5", pw(N(2), pw(N(3), N(0.5)))},
      {"-x-y", sub(Expression::negate(X()), Y())},
      {"x/(y-z)", dvd(X(), sub(Y(), Z()))},
      {"(x+y)*(x-y)", mul(add(X(), Y()), sub(X(), Y()))},
      {"cos(z)", fn(Func::Cos, Z())},
      {"sin(z)", fn(Func::Sin, Z())},
      {"1 + z*z", add(N(1), mul(Z(), Z()))},
      {"exp(sin(x))/(2+cos(y))", dvd(fn(Func::Exp, fn(Func::Sin, X())), add(N(2), fn(Func::Cos, Y())))},
      {"0.5*(x^2 - y^2)", mul(N(0.5), sub(pw(X(), N(2)), pw(Y(), N(2))))},
      {"z^2*x - 3e-2", sub(mul(pw(Z(), N(2)), X()), N(3e-2))},
      {"-(-(x))", Expression::negate(Expression::negate(X()))},
      {"pi", pi},
  };
  REQUIRE(corpus.size() == 20);
  for (const auto& c : corpus) {
    INFO(c.src);
    const double a = parse(c.src).evaluate(p);
    const double b = c.tree.evaluate(p);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}
