#include "certbound/expr.hpp"

#include "certbound/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace certbound {

struct Expr::Access {
  static std::shared_ptr<Expr> make(Kind kind, std::vector<ExprPtr> children = {}) {
    auto e = std::make_shared<Expr>();
    e->kind_ = kind;
    e->children_ = std::move(children);
    return e;
  }

  // Derives the cached summary fields from the children.
  static ExprPtr finish(std::shared_ptr<Expr> e) {
    ExprClass cls = ExprClass::Polynomial;
    bool smooth = true;
    std::size_t size = 1;
    std::size_t var_end = 0;
    for (const auto& c : e->children_) {
      cls = std::max(cls, c->class_);
      smooth = smooth && c->smooth_;
      size += c->size_;
      var_end = std::max(var_end, c->var_end_);
    }
    switch (e->kind_) {
      case Kind::Var:
        var_end = e->index_ + 1;
        break;
      case Kind::Binary:
        if (e->op_ == BinaryOp::Div) cls = std::max(cls, ExprClass::Semialgebraic);
        break;
      case Kind::Sqrt:
        cls = std::max(cls, ExprClass::Semialgebraic);
        break;
      case Kind::Abs:
      case Kind::MinMax:
        cls = std::max(cls, ExprClass::Semialgebraic);
        smooth = false;
        break;
      case Kind::Transcendental:
        cls = ExprClass::Transcendental;
        break;
      default:
        break;
    }
    e->class_ = cls;
    e->smooth_ = smooth;
    e->size_ = size;
    e->var_end_ = var_end;
    return e;
  }

  static void set_value(Expr& e, const Rational& v) { e.value_ = v; }
  static void set_index(Expr& e, std::size_t i) { e.index_ = i; }
  static void set_op(Expr& e, BinaryOp op) { e.op_ = op; }
  static void set_exponent(Expr& e, unsigned p) { e.exponent_ = p; }
  static void set_minmax(Expr& e, MinMaxKind k) { e.minmax_ = k; }
  static void set_function(Expr& e, Function f) { e.function_ = f; }
};

std::string_view to_string(Function f) noexcept {
  switch (f) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Arctan: return "arctan";
    case Function::Exp: return "exp";
    case Function::Log: return "log";
  }
  return "?";
}

using A = Expr::Access;

ExprPtr constant(const Rational& value) {
  auto e = A::make(Expr::Kind::Const);
  A::set_value(*e, value);
  return A::finish(e);
}

ExprPtr constant(long value) { return constant(Rational(value)); }

ExprPtr variable(std::size_t index) {
  auto e = A::make(Expr::Kind::Var);
  A::set_index(*e, index);
  return A::finish(e);
}

ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  if (lhs->is_const() && rhs->is_const()) {
    const Rational& a = lhs->value();
    const Rational& b = rhs->value();
    switch (op) {
      case BinaryOp::Add: return constant(Rational(a + b));
      case BinaryOp::Sub: return constant(Rational(a - b));
      case BinaryOp::Mul: return constant(Rational(a * b));
      case BinaryOp::Div:
        if (sgn(b) == 0) throw DomainError("division by the constant zero");
        return constant(Rational(a / b));
    }
  }
  switch (op) {
    case BinaryOp::Add:
      if (lhs->is_const(0)) return rhs;
      if (rhs->is_const(0)) return lhs;
      break;
    case BinaryOp::Sub:
      if (rhs->is_const(0)) return lhs;
      if (lhs->is_const(0)) return negate(rhs);
      break;
    case BinaryOp::Mul:
      if (lhs->is_const(0) || rhs->is_const(0)) return constant(0);
      if (lhs->is_const(1)) return rhs;
      if (rhs->is_const(1)) return lhs;
      break;
    case BinaryOp::Div:
      if (rhs->is_const(0)) throw DomainError("division by the constant zero");
      if (rhs->is_const(1)) return lhs;
      break;
  }
  auto e = A::make(Expr::Kind::Binary, {std::move(lhs), std::move(rhs)});
  A::set_op(*e, op);
  return A::finish(e);
}

ExprPtr negate(ExprPtr e) {
  if (e->is_const()) return constant(Rational(-e->value()));
  return binary(BinaryOp::Mul, constant(-1), std::move(e));
}

ExprPtr power(ExprPtr base, unsigned exponent) {
  if (exponent == 0) return constant(1);
  if (exponent == 1) return base;
  if (base->is_const()) {
    Rational r(1);
    for (unsigned i = 0; i < exponent; ++i) r *= base->value();
    return constant(r);
  }
  auto e = A::make(Expr::Kind::Pow, {std::move(base)});
  A::set_exponent(*e, exponent);
  return A::finish(e);
}

ExprPtr sqrt_of(ExprPtr child) { return A::finish(A::make(Expr::Kind::Sqrt, {std::move(child)})); }

ExprPtr abs_of(ExprPtr child) {
  if (child->is_const()) return constant(Rational(abs(child->value())));
  return A::finish(A::make(Expr::Kind::Abs, {std::move(child)}));
}

ExprPtr min_max(MinMaxKind kind, std::vector<ExprPtr> operands) {
  if (operands.empty()) throw std::invalid_argument("min/max needs at least one operand");
  if (operands.size() == 1) return operands.front();
  auto e = A::make(Expr::Kind::MinMax, std::move(operands));
  A::set_minmax(*e, kind);
  return A::finish(e);
}

ExprPtr apply(Function f, ExprPtr child) {
  auto e = A::make(Expr::Kind::Transcendental, {std::move(child)});
  A::set_function(*e, f);
  return A::finish(e);
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (&a == &b) return true;
  if (a.kind() != b.kind() || a.size() != b.size()) return false;
  switch (a.kind()) {
    case Expr::Kind::Const: return a.value() == b.value();
    case Expr::Kind::Var: return a.var_index() == b.var_index();
    case Expr::Kind::Binary: if (a.op() != b.op()) return false; break;
    case Expr::Kind::Pow: if (a.exponent() != b.exponent()) return false; break;
    case Expr::Kind::MinMax: if (a.minmax() != b.minmax()) return false; break;
    case Expr::Kind::Transcendental: if (a.function() != b.function()) return false; break;
    default: break;
  }
  if (a.children().size() != b.children().size()) return false;
  for (std::size_t i = 0; i < a.children().size(); ++i)
    if (!structurally_equal(a.child(i), b.child(i))) return false;
  return true;
}

std::vector<std::size_t> variable_occurrences(const Expr& e, std::size_t num_vars) {
  std::vector<std::size_t> counts(std::max(num_vars, e.var_end()), 0);
  std::function<void(const Expr&)> walk = [&](const Expr& node) {
    if (node.kind() == Expr::Kind::Var) ++counts[node.var_index()];
    for (const auto& c : node.children()) walk(*c);
  };
  walk(e);
  return counts;
}

double eval(const Expr& e, std::span<const double> x) {
  switch (e.kind()) {
    case Expr::Kind::Const:
      return e.value().get_d();
    case Expr::Kind::Var:
      if (e.var_index() >= x.size()) throw std::out_of_range("evaluation point too short");
      return x[e.var_index()];
    case Expr::Kind::Binary: {
      const double a = eval(e.child(0), x);
      const double b = eval(e.child(1), x);
      switch (e.op()) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
          if (b == 0.0) throw DomainError("division by zero");
          return a / b;
      }
      break;
    }
    case Expr::Kind::Pow: {
      const double b = eval(e.child(0), x);
      double r = 1.0;
      for (unsigned i = 0; i < e.exponent(); ++i) r *= b;
      return r;
    }
    case Expr::Kind::Sqrt: {
      const double a = eval(e.child(0), x);
      if (a < 0.0) throw DomainError("sqrt of a negative value");
      return std::sqrt(a);
    }
    case Expr::Kind::Abs:
      return std::fabs(eval(e.child(0), x));
    case Expr::Kind::MinMax: {
      double r = eval(e.child(0), x);
      for (std::size_t i = 1; i < e.children().size(); ++i) {
        const double v = eval(e.child(i), x);
        r = e.minmax() == MinMaxKind::Min ? std::min(r, v) : std::max(r, v);
      }
      return r;
    }
    case Expr::Kind::Transcendental: {
      const double a = eval(e.child(0), x);
      switch (e.function()) {
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Arctan: return std::atan(a);
        case Function::Exp: return std::exp(a);
        case Function::Log:
          if (a <= 0.0) throw DomainError("log of a nonpositive value");
          return std::log(a);
      }
      break;
    }
  }
  throw std::logic_error("unhandled expression kind");
}

ExprPtr diff(const ExprPtr& e, std::size_t var) {
  if (e->var_end() <= var) return constant(0);
  switch (e->kind()) {
    case Expr::Kind::Const:
      return constant(0);
    case Expr::Kind::Var:
      return constant(e->var_index() == var ? 1 : 0);
    case Expr::Kind::Binary: {
      const ExprPtr& u = e->child_ptr(0);
      const ExprPtr& v = e->child_ptr(1);
      ExprPtr du = diff(u, var);
      ExprPtr dv = diff(v, var);
      switch (e->op()) {
        case BinaryOp::Add: return du + dv;
        case BinaryOp::Sub: return du - dv;
        case BinaryOp::Mul: return du * v + u * dv;
        case BinaryOp::Div:
          if (dv->is_const(0)) return du / v;
          return (du * v - u * dv) / power(v, 2);
      }
      break;
    }
    case Expr::Kind::Pow: {
      const ExprPtr& u = e->child_ptr(0);
      return constant(static_cast<long>(e->exponent())) * power(u, e->exponent() - 1) * diff(u, var);
    }
    case Expr::Kind::Sqrt:
      return diff(e->child_ptr(0), var) / (constant(2) * e);
    case Expr::Kind::Abs:
    case Expr::Kind::MinMax:
      throw Error(ErrorCategory::Domain, "cannot differentiate a non-smooth node (abs/min/max)");
    case Expr::Kind::Transcendental: {
      const ExprPtr& u = e->child_ptr(0);
      ExprPtr du = diff(u, var);
      if (du->is_const(0)) return du;
      switch (e->function()) {
        case Function::Sin: return apply(Function::Cos, u) * du;
        case Function::Cos: return negate(apply(Function::Sin, u)) * du;
        case Function::Arctan: return du / (constant(1) + power(u, 2));
        case Function::Exp: return e * du;
        case Function::Log: return du / u;
      }
      break;
    }
  }
  throw std::logic_error("unhandled expression kind");
}

ExprPtr hess(const ExprPtr& e, std::size_t i, std::size_t j) { return diff(diff(e, i), j); }

namespace {

std::string constant_text(const Rational& v) {
  const bool negative = sgn(v) < 0;
  const Rational magnitude = abs(v);
  std::string body = to_terminating_decimal(magnitude);
  if (body.empty()) return negative ? "(-" + to_fraction_string(magnitude) + ")" : "(" + to_fraction_string(magnitude) + ")";
  return negative ? "(-" + body + ")" : body;
}

void print_into(const Expr& e, std::span<const std::string> names, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Const:
      out += constant_text(e.value());
      return;
    case Expr::Kind::Var:
      out += e.var_index() < names.size() ? names[e.var_index()] : "x" + std::to_string(e.var_index() + 1);
      return;
    case Expr::Kind::Binary: {
      static constexpr char ops[] = {'+', '-', '*', '/'};
      out += '(';
      print_into(e.child(0), names, out);
      out += ops[static_cast<int>(e.op())];
      print_into(e.child(1), names, out);
      out += ')';
      return;
    }
    case Expr::Kind::Pow:
      out += '(';
      print_into(e.child(0), names, out);
      out += ")^" + std::to_string(e.exponent());
      return;
    case Expr::Kind::Sqrt:
    case Expr::Kind::Abs:
    case Expr::Kind::Transcendental: {
      if (e.kind() == Expr::Kind::Sqrt) out += "sqrt";
      else if (e.kind() == Expr::Kind::Abs) out += "abs";
      else out += to_string(e.function());
      out += '(';
      print_into(e.child(0), names, out);
      out += ')';
      return;
    }
    case Expr::Kind::MinMax: {
      out += e.minmax() == MinMaxKind::Min ? "min(" : "max(";
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) out += ',';
        print_into(e.child(i), names, out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string print(const Expr& e, std::span<const std::string> names) {
  std::string out;
  print_into(e, names, out);
  return out;
}

}  // namespace certbound
