#include "certbound/interval.hpp"

#include "certbound/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace certbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Error-free transformations: return the rounded result and the sign of the
// rounding error (true value minus double result).
int two_sum_sign(double a, double b, double s) {
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return (err > 0) - (err < 0);
}

double add_down(double a, double b) {
  const double s = a + b;
  if (!std::isfinite(s)) return s;
  return two_sum_sign(a, b, s) < 0 ? step_down(s) : s;
}
double add_up(double a, double b) {
  const double s = a + b;
  if (!std::isfinite(s)) return s;
  return two_sum_sign(a, b, s) > 0 ? step_up(s) : s;
}

int mul_sign(double a, double b, double p) {
  const double err = std::fma(a, b, -p);
  return (err > 0) - (err < 0);
}
double mul_down(double a, double b) {
  const double p = a * b;
  if (!std::isfinite(p)) return p;
  return mul_sign(a, b, p) < 0 ? step_down(p) : p;
}
double mul_up(double a, double b) {
  const double p = a * b;
  if (!std::isfinite(p)) return p;
  return mul_sign(a, b, p) > 0 ? step_up(p) : p;
}

// a / b = q + r / b with r = a - q b computed exactly by fma.
int div_sign(double a, double b, double q) {
  const double r = std::fma(-q, b, a);
  const int sr = (r > 0) - (r < 0);
  return b > 0 ? sr : -sr;
}
double div_down(double a, double b) {
  const double q = a / b;
  if (!std::isfinite(q)) return q;
  return div_sign(a, b, q) < 0 ? step_down(q) : q;
}
double div_up(double a, double b) {
  const double q = a / b;
  if (!std::isfinite(q)) return q;
  return div_sign(a, b, q) > 0 ? step_up(q) : q;
}

double sqrt_down(double a) {
  const double s = std::sqrt(a);
  return std::fma(-s, s, a) < 0 ? step_down(s) : s;
}
double sqrt_up(double a) {
  const double s = std::sqrt(a);
  return std::fma(-s, s, a) > 0 ? step_up(s) : s;
}

// pi/2 enclosure used for the quadrant decomposition.
constexpr double kHalfPiLo = 1.5707963267948966;
const double kHalfPiHi = step_up(kHalfPiLo);

// Whether some point (2j + offset) * pi/2 may lie in [lo, hi]; errs on yes.
bool may_contain_multiple(double lo, double hi, int offset) {
  // candidate j values around lo
  const double period = 4.0 * kHalfPiLo;
  const double start = std::floor((lo - offset * kHalfPiHi) / period) - 1.0;
  for (double j = start; j <= start + 3.0; j += 1.0) {
    const double m = 4.0 * j + offset;
    const double a = m >= 0 ? m * kHalfPiLo : m * kHalfPiHi;
    const double b = m >= 0 ? m * kHalfPiHi : m * kHalfPiLo;
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(a));
    if (b + slack >= lo && a - slack <= hi) return true;
  }
  return false;
}

Interval sin_core(double lo, double hi) {
  if (hi - lo >= 4.0 * kHalfPiLo) return {-1.0, 1.0};
  const double s_lo = std::sin(lo);
  const double s_hi = std::sin(hi);
  double r_lo = step_down(std::min(s_lo, s_hi));
  double r_hi = step_up(std::max(s_lo, s_hi));
  if (may_contain_multiple(lo, hi, 1)) r_hi = 1.0;
  if (may_contain_multiple(lo, hi, -1)) r_lo = -1.0;
  return {std::max(-1.0, r_lo), std::min(1.0, r_hi)};
}

Interval cos_core(double lo, double hi) {
  if (hi - lo >= 4.0 * kHalfPiLo) return {-1.0, 1.0};
  const double c_lo = std::cos(lo);
  const double c_hi = std::cos(hi);
  double r_lo = step_down(std::min(c_lo, c_hi));
  double r_hi = step_up(std::max(c_lo, c_hi));
  if (may_contain_multiple(lo, hi, 0)) r_hi = 1.0;
  if (may_contain_multiple(lo, hi, 2)) r_lo = -1.0;
  return {std::max(-1.0, r_lo), std::min(1.0, r_hi)};
}

Interval widen(double lo, double hi, int ulps) {
  for (int i = 0; i < ulps; ++i) {
    lo = step_down(lo);
    hi = step_up(hi);
  }
  return {lo, hi};
}

}  // namespace

double step_down(double x) noexcept { return std::nextafter(x, -kInf); }
double step_up(double x) noexcept { return std::nextafter(x, kInf); }

Interval::Interval(double l, double h) : lo(l), hi(h) {
  if (!(l <= h)) throw std::invalid_argument("interval with lo > hi");
}

double Interval::magnitude() const noexcept { return std::max(std::fabs(lo), std::fabs(hi)); }

double Interval::clamp(double x) const noexcept { return std::min(hi, std::max(lo, x)); }

Interval operator+(const Interval& a, const Interval& b) { return {add_down(a.lo, b.lo), add_up(a.hi, b.hi)}; }
Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }
Interval operator-(const Interval& a, const Interval& b) { return a + (-b); }

Interval operator*(const Interval& a, const Interval& b) {
  const double cand[4][2] = {{a.lo, b.lo}, {a.lo, b.hi}, {a.hi, b.lo}, {a.hi, b.hi}};
  double lo = kInf;
  double hi = -kInf;
  for (const auto& c : cand) {
    lo = std::min(lo, mul_down(c[0], c[1]));
    hi = std::max(hi, mul_up(c[0], c[1]));
  }
  return {lo, hi};
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) throw DomainError("division by an interval containing zero");
  const double cand[4][2] = {{a.lo, b.lo}, {a.lo, b.hi}, {a.hi, b.lo}, {a.hi, b.hi}};
  double lo = kInf;
  double hi = -kInf;
  for (const auto& c : cand) {
    lo = std::min(lo, div_down(c[0], c[1]));
    hi = std::max(hi, div_up(c[0], c[1]));
  }
  return {lo, hi};
}

Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

Interval intersect(const Interval& a, const Interval& b) {
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (lo > hi) return a;
  return {lo, hi};
}

namespace {

// |x|^p rounded down / up.
double abs_pow_down(double x, unsigned p) {
  double r = 1.0;
  for (unsigned i = 0; i < p; ++i) r = mul_down(r, std::fabs(x));
  return r;
}
double abs_pow_up(double x, unsigned p) {
  double r = 1.0;
  for (unsigned i = 0; i < p; ++i) r = mul_up(r, std::fabs(x));
  return r;
}
double odd_pow_down(double x, unsigned p) { return x >= 0 ? abs_pow_down(x, p) : -abs_pow_up(x, p); }
double odd_pow_up(double x, unsigned p) { return x >= 0 ? abs_pow_up(x, p) : -abs_pow_down(x, p); }

}  // namespace

Interval pow(const Interval& a, unsigned exponent) {
  if (exponent == 0) return {1.0, 1.0};
  if (exponent % 2 == 1) return {odd_pow_down(a.lo, exponent), odd_pow_up(a.hi, exponent)};
  const double m = a.magnitude();
  const double n = a.contains_zero() ? 0.0 : std::min(std::fabs(a.lo), std::fabs(a.hi));
  return {abs_pow_down(n, exponent), abs_pow_up(m, exponent)};
}

Interval sqrt(const Interval& a) {
  if (a.lo < 0) throw DomainError("sqrt argument not provably nonnegative");
  return {sqrt_down(a.lo), sqrt_up(a.hi)};
}

Interval abs(const Interval& a) {
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return -a;
  return {0.0, a.magnitude()};
}

Interval min(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }
Interval max(const Interval& a, const Interval& b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }

Interval sin(const Interval& a) { return sin_core(a.lo, a.hi); }
Interval cos(const Interval& a) { return cos_core(a.lo, a.hi); }

Interval atan(const Interval& a) {
  return {std::max(-2.0, step_down(std::atan(a.lo))), std::min(2.0, step_up(std::atan(a.hi)))};
}

Interval exp(const Interval& a) { return {std::max(0.0, step_down(std::exp(a.lo))), step_up(std::exp(a.hi))}; }

Interval log(const Interval& a) {
  if (a.lo <= 0) throw DomainError("log argument not provably positive");
  return {step_down(std::log(a.lo)), step_up(std::log(a.hi))};
}

Interval apply(Function f, const Interval& a) {
  switch (f) {
    case Function::Sin: return sin(a);
    case Function::Cos: return cos(a);
    case Function::Arctan: return atan(a);
    case Function::Exp: return exp(a);
    case Function::Log: return log(a);
  }
  throw std::logic_error("unknown function");
}

Box::Box(std::vector<Interval> sides) : sides_(std::move(sides)) {}

std::size_t Box::widest_coordinate() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sides_.size(); ++i)
    if (sides_[i].width() > sides_[best].width()) best = i;
  return best;
}

double Box::max_width() const { return sides_.empty() ? 0.0 : sides_[widest_coordinate()].width(); }

double Box::volume() const {
  double v = 1.0;
  for (const auto& s : sides_) v *= s.width();
  return v;
}

std::vector<double> Box::midpoint() const {
  std::vector<double> m;
  m.reserve(sides_.size());
  for (const auto& s : sides_) m.push_back(s.mid());
  return m;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != sides_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!sides_[i].contains(x[i])) return false;
  return true;
}

std::vector<double> Box::clamp(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < sides_.size() && i < out.size(); ++i) out[i] = sides_[i].clamp(out[i]);
  return out;
}

std::pair<Box, Box> Box::split(std::size_t i) const {
  Box left = *this;
  Box right = *this;
  const double m = sides_.at(i).mid();
  left.sides_[i].hi = m;
  right.sides_[i].lo = m;
  return {std::move(left), std::move(right)};
}

std::string to_string(const Interval& i) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "[%.17g,%.17g]", i.lo, i.hi);
  return buf;
}

std::string to_string(const Box& b) {
  std::string s;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) s += "x";
    s += to_string(b[i]);
  }
  return s;
}

Interval interval_eval(const Expr& t, const Box& box) {
  switch (t.kind()) {
    case Expr::Kind::Const:
      return {to_double_down(t.value()), to_double_up(t.value())};
    case Expr::Kind::Var:
      return box[t.var_index()];
    case Expr::Kind::Binary: {
      const Interval a = interval_eval(t.child(0), box);
      const Interval b = interval_eval(t.child(1), box);
      switch (t.op()) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul:
          if (structurally_equal(t.child(0), t.child(1))) return pow(a, 2);
          return a * b;
        case BinaryOp::Div: return a / b;
      }
      break;
    }
    case Expr::Kind::Pow:
      return pow(interval_eval(t.child(0), box), t.exponent());
    case Expr::Kind::Sqrt:
      return sqrt(interval_eval(t.child(0), box));
    case Expr::Kind::Abs:
      return abs(interval_eval(t.child(0), box));
    case Expr::Kind::MinMax: {
      Interval r = interval_eval(t.child(0), box);
      for (std::size_t i = 1; i < t.children().size(); ++i) {
        const Interval v = interval_eval(t.child(i), box);
        r = t.minmax() == MinMaxKind::Min ? min(r, v) : max(r, v);
      }
      return r;
    }
    case Expr::Kind::Transcendental:
      return apply(t.function(), interval_eval(t.child(0), box));
  }
  throw std::logic_error("unhandled expression kind");
}

void check_domain(Function phi, const Interval& domain) {
  if (phi == Function::Log && domain.lo <= 0) throw DomainError("log argument not provably positive");
}

Interval second_derivative_range(Function phi, const Interval& domain) {
  check_domain(phi, domain);
  switch (phi) {
    case Function::Sin: return -sin(domain);
    case Function::Cos: return -cos(domain);
    case Function::Exp: return exp(domain);
    case Function::Log: {
      // -1/u^2 is increasing on u > 0
      const Interval sq = pow(domain, 2);
      return -(Interval(1.0) / sq);
    }
    case Function::Arctan: {
      // g(u) = -2u / (1+u^2)^2 has critical points at +-1/sqrt(3)
      auto g = [](double u) {
        const double d = 1.0 + u * u;
        return -2.0 * u / (d * d);
      };
      const double c = 1.0 / std::sqrt(3.0);
      double lo = std::min(g(domain.lo), g(domain.hi));
      double hi = std::max(g(domain.lo), g(domain.hi));
      if (domain.contains(c) || domain.contains(step_down(c)) || domain.contains(step_up(c))) lo = std::min(lo, g(c));
      if (domain.contains(-c) || domain.contains(step_down(-c)) || domain.contains(step_up(-c))) hi = std::max(hi, g(-c));
      // g is evaluated in a handful of operations; 8 ulps cover it, and the
      // extremal value 3 sqrt(3)/8 is itself recomputed with slack
      const double peak = 3.0 * std::sqrt(3.0) / 8.0;
      Interval r = widen(lo, hi, 8);
      r.lo = std::max(r.lo, step_down(step_down(-peak)));
      r.hi = std::min(r.hi, step_up(step_up(peak)));
      return r;
    }
  }
  throw std::logic_error("unknown function");
}

}  // namespace certbound
