#pragma once

#include "certbound/rational.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace certbound {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { Add, Sub, Mul, Div };
enum class MinMaxKind { Min, Max };
enum class Function { Sin, Cos, Arctan, Exp, Log };

std::string_view to_string(Function f) noexcept;

/// Structural class of a subtree, from most to least restrictive.
enum class ExprClass { Polynomial, Semialgebraic, Transcendental };

/// Immutable expression node. Build trees through the factory functions
/// below; they apply constant folding and the 0/1 identities so that every
/// tree reachable from the public API is already in simplified form.
class Expr {
 public:
  enum class Kind { Const, Var, Binary, Pow, Sqrt, Abs, MinMax, Transcendental };

  Kind kind() const noexcept { return kind_; }
  const Rational& value() const noexcept { return value_; }
  std::size_t var_index() const noexcept { return index_; }
  BinaryOp op() const noexcept { return op_; }
  unsigned exponent() const noexcept { return exponent_; }
  MinMaxKind minmax() const noexcept { return minmax_; }
  Function function() const noexcept { return function_; }

  const std::vector<ExprPtr>& children() const noexcept { return children_; }
  const Expr& child(std::size_t i = 0) const { return *children_.at(i); }
  const ExprPtr& child_ptr(std::size_t i = 0) const { return children_.at(i); }

  bool is_const() const noexcept { return kind_ == Kind::Const; }
  bool is_const(long v) const { return kind_ == Kind::Const && value_ == v; }

  ExprClass classification() const noexcept { return class_; }
  /// False when an Abs or MinMax node occurs anywhere below.
  bool is_smooth() const noexcept { return smooth_; }
  /// Number of nodes in the tree (shared subtrees counted once per use).
  std::size_t size() const noexcept { return size_; }
  /// One past the largest variable index occurring in the tree.
  std::size_t var_end() const noexcept { return var_end_; }

  struct Access;

 private:
  Kind kind_ = Kind::Const;
  Rational value_;
  std::size_t index_ = 0;
  BinaryOp op_ = BinaryOp::Add;
  unsigned exponent_ = 0;
  MinMaxKind minmax_ = MinMaxKind::Min;
  Function function_ = Function::Sin;
  std::vector<ExprPtr> children_;
  ExprClass class_ = ExprClass::Polynomial;
  bool smooth_ = true;
  std::size_t size_ = 1;
  std::size_t var_end_ = 0;
};

ExprPtr constant(const Rational& value);
ExprPtr constant(long value);
ExprPtr variable(std::size_t index);
ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr power(ExprPtr base, unsigned exponent);
ExprPtr negate(ExprPtr e);
ExprPtr sqrt_of(ExprPtr e);
ExprPtr abs_of(ExprPtr e);
ExprPtr min_max(MinMaxKind kind, std::vector<ExprPtr> operands);
ExprPtr apply(Function f, ExprPtr e);

inline ExprPtr operator+(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Add, std::move(a), std::move(b)); }
inline ExprPtr operator-(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Sub, std::move(a), std::move(b)); }
inline ExprPtr operator*(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Mul, std::move(a), std::move(b)); }
inline ExprPtr operator/(ExprPtr a, ExprPtr b) { return binary(BinaryOp::Div, std::move(a), std::move(b)); }

/// Structural equality of two trees.
bool structurally_equal(const Expr& a, const Expr& b);

/// Number of occurrences of each variable index below `e`.
std::vector<std::size_t> variable_occurrences(const Expr& e, std::size_t num_vars);

/// Double evaluation. Throws DomainError on log/sqrt/division domain faults.
double eval(const Expr& e, std::span<const double> x);

/// Symbolic partial derivative. Throws Error(Domain) on a non-smooth node.
ExprPtr diff(const ExprPtr& e, std::size_t var);
ExprPtr hess(const ExprPtr& e, std::size_t i, std::size_t j);

/// Infix rendering that parses back to the identical tree. Variables print
/// as `names[i]` when given, otherwise as x1, x2, ...
std::string print(const Expr& e, std::span<const std::string> names = {});

}  // namespace certbound
