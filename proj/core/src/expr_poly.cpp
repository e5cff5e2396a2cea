#include "certbound/expr_poly.hpp"

#include <stdexcept>

namespace certbound {

RationalPoly to_polynomial(const Expr& e, std::size_t n) {
  switch (e.kind()) {
    case Expr::Kind::Const:
      return RationalPoly::constant(n, e.value());
    case Expr::Kind::Var:
      return RationalPoly::variable(n, e.var_index());
    case Expr::Kind::Binary: {
      RationalPoly a = to_polynomial(e.child(0), n);
      RationalPoly b = to_polynomial(e.child(1), n);
      switch (e.op()) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
          if (b.is_constant() && sgn(b.constant_term()) != 0) return a * Rational(1 / b.constant_term());
          throw std::invalid_argument("division by a non-constant is not polynomial");
      }
      break;
    }
    case Expr::Kind::Pow:
      return to_polynomial(e.child(0), n).pow(e.exponent());
    default:
      break;
  }
  throw std::invalid_argument("expression is not polynomial");
}

ExprPtr to_expr(const RationalPoly& p) {
  ExprPtr sum = constant(0);
  for (const auto& [m, c] : p.terms()) {
    ExprPtr term = constant(c);
    for (std::size_t i = 0; i < p.num_vars(); ++i)
      if (m[i] > 0) term = term * power(variable(i), m[i]);
    sum = sum + term;
  }
  return sum;
}

}  // namespace certbound
