#pragma once

// Small arithmetic expression language used for user-defined fields and
// manufactured solutions:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | 'x' | 'y' | 'z' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | tan | exp | log | sqrt | abs
//
// Expressions are immutable after parsing and safe to evaluate concurrently.

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "olap/vec3.hpp"

namespace olap::expr {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t offset, const std::string& message);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& subexpression, const std::string& reason);
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs };

class Expression {
 public:
  enum class Kind { Number, Variable, Pi, Negate, Binary, Call };

  static Expression number(double value);  // value must be finite and >= 0
  static Expression variable(char name);   // 'x', 'y' or 'z'
  static Expression pi();
  static Expression negate(Expression operand);
  static Expression binary(BinaryOp op, Expression lhs, Expression rhs);
  static Expression call(Func fn, Expression arg);

  Kind kind() const;
  double value() const;      // Number
  int variable_index() const;  // Variable: 0, 1, 2
  BinaryOp op() const;        // Binary
  Func func() const;          // Call
  Expression lhs() const;     // Binary lhs, Negate/Call operand
  Expression rhs() const;     // Binary rhs

  double evaluate(const Vec3& point) const;
  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;

  friend class Parser;
};

/// Parses source text; throws SyntaxError with the byte offset of the problem.
Expression parse(std::string_view source);

std::string_view func_name(Func fn);

}  // namespace olap::expr
