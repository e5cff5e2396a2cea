#include "certbound/estimator.hpp"

#include "certbound/error.hpp"
#include "certbound/expr_poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certbound {

namespace {

Rational exact(double v) { return rational_from_double(v); }

// Enclosure of phi' over I.
Interval first_derivative_range(Function phi, const Interval& u) {
  switch (phi) {
    case Function::Sin: return cos(u);
    case Function::Cos: return -sin(u);
    case Function::Arctan: return Interval(1.0) / (Interval(1.0) + pow(u, 2));
    case Function::Exp: return exp(u);
    case Function::Log: return Interval(1.0) / u;
  }
  throw std::logic_error("unknown function");
}

double point_value(Function phi, double a) {
  switch (phi) {
    case Function::Sin: return std::sin(a);
    case Function::Cos: return std::cos(a);
    case Function::Arctan: return std::atan(a);
    case Function::Exp: return std::exp(a);
    case Function::Log: return std::log(a);
  }
  throw std::logic_error("unknown function");
}

double point_slope(Function phi, double a) {
  switch (phi) {
    case Function::Sin: return std::cos(a);
    case Function::Cos: return -std::sin(a);
    case Function::Arctan: return 1.0 / (1.0 + a * a);
    case Function::Exp: return std::exp(a);
    case Function::Log: return 1.0 / a;
  }
  throw std::logic_error("unknown function");
}

// Rounded-up a*b + c for nonnegative operands.
double mul_add_up(double a, double b, double c) { return step_up(step_up(a * b) + c); }

// Combines two estimators on the same box: lhs liftings first.
struct Merged {
  SAEstimator est;
  RationalPoly lhs;
  RationalPoly rhs;
};

Merged merge(const SAEstimator& a, const SAEstimator& b) {
  if (!(a.box == b.box)) throw std::invalid_argument("estimators over different boxes");
  const std::size_t n = a.num_original();
  const std::size_t total = a.num_vars() + b.lifting_count();
  std::vector<std::size_t> map(b.num_vars());
  for (std::size_t i = 0; i < n; ++i) map[i] = i;
  for (std::size_t j = 0; j < b.lifting_count(); ++j) map[n + j] = a.num_vars() + j;
  auto move_b = [&](const RationalPoly& p) { return p.remap(total, map); };

  Merged m;
  m.est.box = a.box;
  m.est.liftings = a.liftings;
  m.est.liftings.insert(m.est.liftings.end(), b.liftings.begin(), b.liftings.end());
  for (const auto& g : a.inequalities) m.est.inequalities.push_back(g.widen(total));
  for (const auto& g : b.inequalities) m.est.inequalities.push_back(move_b(g));
  for (const auto& h : a.equalities) m.est.equalities.push_back(h.widen(total));
  for (const auto& h : b.equalities) m.est.equalities.push_back(move_b(h));
  m.lhs = a.objective.widen(total);
  m.rhs = move_b(b.objective);
  m.est.objective = RationalPoly(total);
  return m;
}

Interval poly_range(const RationalPoly& p, std::span<const Interval> box) {
  Interval acc(0.0);
  for (const auto& [m, c] : p.terms()) {
    Interval term(to_double_down(c), to_double_up(c));
    for (std::size_t i = 0; i < p.num_vars(); ++i)
      if (m[i] > 0) term = term * pow(box[i], m[i]);
    acc = acc + term;
  }
  return acc;
}

std::vector<Interval> lifted_box(const SAEstimator& e) {
  std::vector<Interval> b = e.box.sides();
  for (const auto& l : e.liftings) b.push_back(l.bounds);
  return b;
}

Operand exact_operand(const ExprPtr& t, const Box& box) {
  return {t, exact_estimator(t, box), interval_eval(*t, box)};
}

}  // namespace

double Parabola::nominal(double u) const {
  const double d = u - center;
  return value + slope * d + 0.5 * curvature * d * d;
}

double Parabola::operator()(double u) const {
  const Rational d = exact(u) - exact(center);
  Rational p = exact(value) + exact(slope) * d + exact(curvature) * d * d / 2;
  p += kind == ParabolaKind::Under ? Rational(-exact(slack)) : exact(slack);
  return p.get_d();
}

RationalPoly Parabola::compose(const RationalPoly& u) const {
  const std::size_t n = u.num_vars();
  const RationalPoly d = u - RationalPoly::constant(n, exact(center));
  const Rational shift = kind == ParabolaKind::Under ? Rational(exact(value) - exact(slack))
                                                     : Rational(exact(value) + exact(slack));
  return RationalPoly::constant(n, shift) + exact(slope) * d + Rational(exact(curvature) / 2) * (d * d);
}

ParabolaSet build_par(Function phi, const Interval& domain, std::span<const double> points) {
  if (points.empty()) throw std::invalid_argument("build_par needs at least one control point");
  check_domain(phi, domain);
  const Interval curvature = second_derivative_range(phi, domain);
  ParabolaSet set;
  set.domain = domain;
  for (double a : points) {
    if (!domain.contains(a)) throw DomainError("control point outside the parabola interval");
    const double value = point_value(phi, a);
    const double slope = point_slope(phi, a);
    const Interval v_enc = apply(phi, Interval(a));
    const Interval s_enc = first_derivative_range(phi, Interval(a));
    const double reach = std::max(a - domain.lo, domain.hi - a);
    const double slope_err = std::max(std::fabs(slope - s_enc.lo), std::fabs(s_enc.hi - slope));
    // Taylor with the exact phi(a), phi'(a): the slack covers |value - phi(a)|
    // plus |slope - phi'(a)| * |u - a|.
    const double under_slack = mul_add_up(slope_err, reach, std::max(0.0, value - v_enc.lo));
    const double over_slack = mul_add_up(slope_err, reach, std::max(0.0, v_enc.hi - value));
    set.under.push_back({a, value, slope, curvature.lo, ParabolaKind::Under, under_slack});
    set.over.push_back({a, value, slope, curvature.hi, ParabolaKind::Over, over_slack});
  }
  return set;
}

std::vector<double> SAEstimator::witness(std::span<const double> x) const {
  std::vector<double> w(x.begin(), x.end());
  for (const auto& l : liftings) w.push_back(eval(*l.origin, x));
  return w;
}

double SAEstimator::witness_violation(std::span<const double> x) const {
  const std::vector<double> w = witness(x);
  double worst = 0.0;
  for (const auto& g : inequalities) worst = std::max(worst, -to_real(g).evaluate(w));
  for (const auto& h : equalities) worst = std::max(worst, std::fabs(to_real(h).evaluate(w)));
  for (std::size_t j = 0; j < liftings.size(); ++j) {
    const double v = w[box.dim() + j];
    worst = std::max({worst, liftings[j].bounds.lo - v, v - liftings[j].bounds.hi});
  }
  return worst;
}

double SAEstimator::objective_at_witness(std::span<const double> x) const {
  const std::vector<double> w = witness(x);
  return to_real(objective).evaluate(w);
}

SAEstimator polynomial_estimator(const RationalPoly& p, const Box& box) {
  if (p.num_vars() != box.dim()) throw std::invalid_argument("polynomial dimension differs from the box");
  SAEstimator e;
  e.box = box;
  e.objective = p;
  return e;
}

std::size_t add_lifting(SAEstimator& e, Lifting lifting) {
  const std::size_t index = e.num_vars();
  e.liftings.push_back(std::move(lifting));
  const std::size_t total = e.num_vars();
  for (auto& g : e.inequalities) g = g.widen(total);
  for (auto& h : e.equalities) h = h.widen(total);
  e.objective = e.objective.widen(total);
  return index;
}

SAEstimator flatten(const SAEstimator& e, const ExprPtr& origin, const Interval& enclosure) {
  if (e.objective.degree() <= 1) return e;
  SAEstimator out = e;
  const std::size_t w = add_lifting(out, {"flat", origin, enclosure});
  const RationalPoly wv = RationalPoly::variable(out.num_vars(), w);
  out.equalities.push_back(wv - out.objective);
  out.objective = wv;
  return out;
}

SAEstimator compose(Function phi, const ParabolaSet& pars, const Operand& child, const ExprPtr& tree) {
  if (!pars.domain.contains(child.enclosure))
    throw DomainError("child enclosure " + to_string(child.enclosure) + " exceeds the parabola interval " +
                      to_string(pars.domain));
  SAEstimator out = flatten(child.estimator, child.tree, child.enclosure);
  const std::size_t z = add_lifting(out, {std::string(to_string(phi)), tree, apply(phi, pars.domain)});
  const RationalPoly zv = RationalPoly::variable(out.num_vars(), z);
  const RationalPoly u = out.objective;
  for (const auto& p : pars.under) out.inequalities.push_back(zv - p.compose(u));
  for (const auto& p : pars.over) out.inequalities.push_back(p.compose(u) - zv);
  out.objective = zv;
  return out;
}

SAEstimator compose_bop(BinaryOp op, const Operand& lhs, const Operand& rhs, const ExprPtr& tree) {
  switch (op) {
    case BinaryOp::Add:
    case BinaryOp::Sub: {
      Merged m = merge(lhs.estimator, rhs.estimator);
      m.est.objective = op == BinaryOp::Add ? m.lhs + m.rhs : m.lhs - m.rhs;
      return m.est;
    }
    case BinaryOp::Mul: {
      const bool lifted = lhs.estimator.lifting_count() + rhs.estimator.lifting_count() > 0;
      const SAEstimator a = lifted && lhs.estimator.lifting_count() > 0
                                ? flatten(lhs.estimator, lhs.tree, lhs.enclosure)
                                : lhs.estimator;
      const SAEstimator b = lifted && rhs.estimator.lifting_count() > 0
                                ? flatten(rhs.estimator, rhs.tree, rhs.enclosure)
                                : rhs.estimator;
      Merged m = merge(a, b);
      m.est.objective = m.lhs * m.rhs;
      return m.est;
    }
    case BinaryOp::Div: {
      if (rhs.enclosure.contains_zero()) throw DomainError("denominator enclosure " + to_string(rhs.enclosure) + " contains 0");
      const auto& den = rhs.estimator;
      if (den.lifting_count() == 0 && den.objective.is_constant()) {
        SAEstimator out = lhs.estimator;
        out.objective = out.objective * Rational(1 / den.objective.constant_term());
        return out;
      }
      Merged m = merge(lhs.estimator, den);
      const std::size_t w = add_lifting(m.est, {"div", tree, lhs.enclosure / rhs.enclosure});
      const std::size_t total = m.est.num_vars();
      const RationalPoly wv = RationalPoly::variable(total, w);
      m.est.equalities.push_back(wv * m.rhs.widen(total) - m.lhs.widen(total));
      m.est.objective = wv;
      return m.est;
    }
  }
  throw std::logic_error("unknown binary operator");
}

SAEstimator compose_unary(const Expr& node, std::span<const Operand> children, const ExprPtr& tree) {
  switch (node.kind()) {
    case Expr::Kind::Pow: {
      const Operand& c = children[0];
      SAEstimator out = c.estimator.lifting_count() > 0 ? flatten(c.estimator, c.tree, c.enclosure) : c.estimator;
      out.objective = out.objective.pow(node.exponent());
      return out;
    }
    case Expr::Kind::Sqrt: {
      const Operand& c = children[0];
      if (c.enclosure.lo < 0.0) throw DomainError("sqrt argument enclosure " + to_string(c.enclosure) + " is not nonnegative");
      SAEstimator out = c.estimator;
      const std::size_t y = add_lifting(out, {"sqrt", tree, sqrt(c.enclosure)});
      const RationalPoly yv = RationalPoly::variable(out.num_vars(), y);
      out.equalities.push_back(yv * yv - out.objective);
      out.objective = yv;
      return out;
    }
    case Expr::Kind::Abs: {
      const Operand& c = children[0];
      SAEstimator out = flatten(c.estimator, c.tree, c.enclosure);
      const std::size_t w = add_lifting(out, {"abs", tree, abs(c.enclosure)});
      const RationalPoly wv = RationalPoly::variable(out.num_vars(), w);
      out.equalities.push_back(wv * wv - out.objective * out.objective);
      out.objective = wv;
      return out;
    }
    case Expr::Kind::MinMax: {
      if (children.empty()) throw std::invalid_argument("min/max needs operands");
      const bool is_max = node.minmax() == MinMaxKind::Max;
      Operand acc = children[0];
      for (std::size_t i = 1; i < children.size(); ++i) {
        const Operand& next = children[i];
        // max(a,b) = (a + b + |a - b|) / 2, min with the opposite sign
        Merged m = merge(acc.estimator, next.estimator);
        const ExprPtr gap = abs_of(acc.tree - next.tree);
        const std::size_t w = add_lifting(m.est, {"abs", gap, abs(acc.enclosure - next.enclosure)});
        const std::size_t total = m.est.num_vars();
        const RationalPoly wv = RationalPoly::variable(total, w);
        const RationalPoly d = m.lhs.widen(total) - m.rhs.widen(total);
        m.est.equalities.push_back(wv * wv - d * d);
        const RationalPoly sum = m.lhs.widen(total) + m.rhs.widen(total);
        m.est.objective = Rational(1, 2) * (is_max ? sum + wv : sum - wv);
        std::vector<ExprPtr> ops;
        for (std::size_t j = 0; j <= i; ++j) ops.push_back(children[j].tree);
        acc.tree = i + 1 == children.size() ? tree : min_max(node.minmax(), ops);
        acc.estimator = std::move(m.est);
        acc.enclosure = is_max ? max(acc.enclosure, next.enclosure) : min(acc.enclosure, next.enclosure);
      }
      return acc.estimator;
    }
    default: throw std::invalid_argument("compose_unary: unsupported node kind");
  }
}

SAEstimator exact_estimator(const ExprPtr& t, const Box& box) {
  const std::size_t n = box.dim();
  if (t->classification() == ExprClass::Polynomial) return polynomial_estimator(to_polynomial(*t, n), box);
  if (t->classification() == ExprClass::Transcendental)
    throw std::invalid_argument("exact_estimator: tree contains a transcendental node");
  switch (t->kind()) {
    case Expr::Kind::Binary:
      return compose_bop(t->op(), exact_operand(t->child_ptr(0), box), exact_operand(t->child_ptr(1), box), t);
    case Expr::Kind::Pow:
    case Expr::Kind::Sqrt:
    case Expr::Kind::Abs:
    case Expr::Kind::MinMax: {
      std::vector<Operand> ops;
      for (const auto& c : t->children()) ops.push_back(exact_operand(c, box));
      return compose_unary(*t, ops, t);
    }
    default: throw std::logic_error("exact_estimator: unexpected node");
  }
}

Interval objective_range(const SAEstimator& e) { return poly_range(e.objective, lifted_box(e)); }

}  // namespace certbound
