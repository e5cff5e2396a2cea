#pragma once

#include "certbound/expr.hpp"

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace certbound {

/// Closed interval [lo, hi] of doubles. Arithmetic is outward rounded: the
/// elementary operations use error-free transformations to round in the
/// right direction only when the double result is inexact, the libm-backed
/// functions step one ulp outward.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double point) : lo(point), hi(point) {}  // NOLINT(google-explicit-constructor)
  Interval(double l, double h);

  double width() const noexcept { return hi - lo; }
  double mid() const noexcept { return lo + 0.5 * (hi - lo); }
  double magnitude() const noexcept;
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  bool contains(const Interval& other) const noexcept { return lo <= other.lo && other.hi <= hi; }
  bool contains_zero() const noexcept { return lo <= 0.0 && 0.0 <= hi; }
  double clamp(double x) const noexcept;

  friend bool operator==(const Interval& a, const Interval& b) noexcept { return a.lo == b.lo && a.hi == b.hi; }
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
/// Throws DomainError when the divisor contains zero.
Interval operator/(const Interval& a, const Interval& b);

Interval hull(const Interval& a, const Interval& b);
/// Intersection; when the two are disjoint (possible only through rounding
/// noise on one side) the tighter-looking operand `a` is returned.
Interval intersect(const Interval& a, const Interval& b);

Interval pow(const Interval& a, unsigned exponent);
Interval sqrt(const Interval& a);
Interval abs(const Interval& a);
Interval min(const Interval& a, const Interval& b);
Interval max(const Interval& a, const Interval& b);
Interval sin(const Interval& a);
Interval cos(const Interval& a);
Interval atan(const Interval& a);
Interval exp(const Interval& a);
Interval log(const Interval& a);
Interval apply(Function f, const Interval& a);

/// Largest double below / smallest double above x.
double step_down(double x) noexcept;
double step_up(double x) noexcept;

/// Axis-aligned box, one interval per variable.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> sides);
  Box(std::initializer_list<Interval> sides) : Box(std::vector<Interval>(sides)) {}

  std::size_t dim() const noexcept { return sides_.size(); }
  const Interval& operator[](std::size_t i) const { return sides_[i]; }
  Interval& operator[](std::size_t i) { return sides_[i]; }
  const std::vector<Interval>& sides() const noexcept { return sides_; }

  /// Coordinate of maximal width, lowest index on ties.
  std::size_t widest_coordinate() const;
  double max_width() const;
  double volume() const;
  std::vector<double> midpoint() const;
  bool contains(std::span<const double> x) const;
  std::vector<double> clamp(std::span<const double> x) const;
  /// Splits coordinate i at its midpoint.
  std::pair<Box, Box> split(std::size_t i) const;

  friend bool operator==(const Box& a, const Box& b) { return a.sides_ == b.sides_; }

 private:
  std::vector<Interval> sides_;
};

std::string to_string(const Interval& i);
std::string to_string(const Box& b);

/// Enclosure of {t(x) : x in K}. Throws DomainError when a log or sqrt
/// argument is not provably in its domain over K, or a divisor contains 0.
Interval interval_eval(const Expr& t, const Box& box);

/// Enclosure of phi'' over I from the closed-form second derivative.
Interval second_derivative_range(Function phi, const Interval& domain);

/// Throws DomainError when I leaves the domain of phi.
void check_domain(Function phi, const Interval& domain);

}  // namespace certbound
