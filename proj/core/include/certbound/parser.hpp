#pragma once

#include "certbound/expr.hpp"
#include "certbound/interval.hpp"
#include "certbound/rational.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace certbound {

/// A parsed problem file: minimize `objective` over `box`, optionally
/// proving the lower bound `goal`.
struct Problem {
  ExprPtr objective;
  Box box;
  std::vector<std::string> names;
  std::optional<Rational> goal;
};

/// Problem file grammar, one statement per line or separated by ';':
///
///   vars: x1 in [lo,hi], x2 in [lo,hi]     (the "vars:" prefix is optional)
///   objective: <infix expression>
///   goal: prove >= <number>
///   # comment
///
/// Precedence: ^ binds tighter than unary -, which binds tighter than * and
/// /, then + and -. Exponents are nonnegative integer literals. Decimal
/// literals are read as exact rationals; box bounds are widened outward to
/// the nearest doubles.
Problem parse_problem(std::string_view text);
Problem load_problem(const std::filesystem::path& path);

/// Parses a bare expression over the given variable names.
ExprPtr parse_expression(std::string_view text, std::span<const std::string> names);

}  // namespace certbound
