#pragma once

#include "certbound/expr.hpp"
#include "certbound/interval.hpp"
#include "certbound/poly.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace certbound {

enum class ParabolaKind { Under, Over };

/// p(u) = value + slope (u - a) + (curvature / 2)(u - a)^2, shifted by
/// `slack` (down for Under, up for Over) to absorb the evaluation error of
/// value and slope, so that the sandwich holds exactly on the interval.
struct Parabola {
  double center = 0.0;
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
  ParabolaKind kind = ParabolaKind::Under;
  double slack = 0.0;

  /// Nominal tangent parabola, without the slack.
  double nominal(double u) const;
  /// Exact rational value of the shifted parabola, rounded to double.
  double operator()(double u) const;
  /// Shifted parabola composed with a polynomial argument, exactly.
  RationalPoly compose(const RationalPoly& u) const;
};

struct ParabolaSet {
  Interval domain;
  std::vector<Parabola> under;
  std::vector<Parabola> over;
};

/// One under- and one over-parabola per control point, with the curvatures
/// taken from the second-derivative range of phi over I.
ParabolaSet build_par(Function phi, const Interval& domain, std::span<const double> points);

/// Auxiliary variable of a lifted estimator. `origin` evaluates to a value
/// of the variable that satisfies every constraint (the exact witness).
struct Lifting {
  std::string label;
  ExprPtr origin;
  Interval bounds;
};

/// Semialgebraic estimator over x in `box` plus lifting variables z.
/// Every constraint holds at the exact witness (x, origin_1(x), ...) and the
/// objective there equals the tree value, so min over the lifted set is a
/// lower bound and max an upper bound of the tree on the box.
/// Constraint and objective polynomials live in num_vars() variables.
struct SAEstimator {
  Box box;
  std::vector<Lifting> liftings;
  std::vector<RationalPoly> inequalities;  // g >= 0
  std::vector<RationalPoly> equalities;    // h = 0
  RationalPoly objective;

  std::size_t num_original() const noexcept { return box.dim(); }
  std::size_t num_vars() const noexcept { return box.dim() + liftings.size(); }
  std::size_t lifting_count() const noexcept { return liftings.size(); }

  /// (x, origin values); throws DomainError outside a lifting's domain.
  std::vector<double> witness(std::span<const double> x) const;
  /// Largest constraint violation at the exact witness.
  double witness_violation(std::span<const double> x) const;
  double objective_at_witness(std::span<const double> x) const;
};

/// Estimator with objective p(x) and no liftings.
SAEstimator polynomial_estimator(const RationalPoly& p, const Box& box);

/// Appends a lifting variable, widening every polynomial; returns its index.
std::size_t add_lifting(SAEstimator& e, Lifting lifting);

/// Reuses the objective as a single variable: returns e unchanged when the
/// objective already has degree <= 1, otherwise a copy with a fresh lifting
/// w = objective (equality pair) as its objective.
SAEstimator flatten(const SAEstimator& e, const ExprPtr& origin, const Interval& enclosure);

/// Child operand of a composition: subtree, its estimator, an enclosure.
struct Operand {
  ExprPtr tree;
  SAEstimator estimator;
  Interval enclosure;
};

/// The transcendental case: z_phi with parab_under(u) <= z_phi <= parab_over(u)
/// where u is the child objective (flattened to one variable when nonlinear).
SAEstimator compose(Function phi, const ParabolaSet& pars, const Operand& child, const ExprPtr& tree);

/// Binary composition. + and - combine objectives, * multiplies (flattened)
/// objectives, / lifts w with w * denominator = numerator. Throws
/// DomainError if the denominator enclosure contains 0.
SAEstimator compose_bop(BinaryOp op, const Operand& lhs, const Operand& rhs, const ExprPtr& tree);

/// Pow, Sqrt, Abs and MinMax applied to already-built operands.
SAEstimator compose_unary(const Expr& node, std::span<const Operand> children, const ExprPtr& tree);

/// Lifted exact representation of a semialgebraic tree (no transcendental
/// node): polynomial parts pass through, sqrt/abs/min/max/division lift.
SAEstimator exact_estimator(const ExprPtr& t, const Box& box);

/// Interval range of the objective over the lifted box: a sound, loose
/// bound that ignores the constraints.
Interval objective_range(const SAEstimator& e);

}  // namespace certbound
