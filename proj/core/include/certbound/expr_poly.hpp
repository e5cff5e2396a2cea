#pragma once

#include "certbound/expr.hpp"
#include "certbound/poly.hpp"

namespace certbound {

/// Expands a polynomial-class tree into a rational polynomial over
/// num_vars variables. Throws std::invalid_argument on other classes.
RationalPoly to_polynomial(const Expr& e, std::size_t num_vars);

/// Inverse direction, used for rendering and tests.
ExprPtr to_expr(const RationalPoly& p);

}  // namespace certbound
