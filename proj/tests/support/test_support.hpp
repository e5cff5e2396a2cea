#pragma once

// Shared helpers for the unit, property and acceptance suites: seeded random
// trees and boxes, and brute-force grid oracles.

#include "certbound/expr.hpp"
#include "certbound/interval.hpp"
#include "certbound/rational.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace certbound::testing {

inline std::vector<std::string> var_names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("x" + std::to_string(i + 1));
  return v;
}

/// Random box with sides inside [-bound, bound] and widths in [min_w, max_w].
inline Box random_box(std::mt19937_64& rng, std::size_t n, double bound = 2.0, double min_w = 0.2,
                      double max_w = 2.0) {
  std::uniform_real_distribution<double> w(min_w, max_w);
  std::vector<Interval> sides;
  for (std::size_t i = 0; i < n; ++i) {
    const double width = w(rng);
    std::uniform_real_distribution<double> lo(-bound, bound - width);
    const double l = lo(rng);
    sides.emplace_back(l, l + width);
  }
  return Box(sides);
}

inline std::vector<double> random_point(std::mt19937_64& rng, const Box& box) {
  std::vector<double> x(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) {
    std::uniform_real_distribution<double> u(box[i].lo, box[i].hi);
    x[i] = u(rng);
  }
  return x;
}

/// Small rational constant in [-3, 3] with denominator 1, 2 or 4.
inline ExprPtr random_constant(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(-12, 12);
  std::uniform_int_distribution<int> den(0, 2);
  Rational r(num(rng));
  r /= 1 << den(rng);
  return constant(r);
}

struct TreeOptions {
  std::size_t num_vars = 2;
  int depth = 3;
  bool transcendental = true;
  bool nonsmooth = false;
};

/// Random tree over the grammar. Every log and sqrt argument is shifted to
/// be positive on [-2,2]^n (1 + square, or exp of something), so the tree is
/// defined on any box inside it.
inline ExprPtr random_tree(std::mt19937_64& rng, const TreeOptions& o, int depth) {
  std::uniform_int_distribution<int> pick(0, 99);
  std::uniform_int_distribution<std::size_t> var(0, o.num_vars - 1);
  if (depth <= 0) {
    return pick(rng) < 75 ? variable(var(rng)) : random_constant(rng);
  }
  const int r = pick(rng);
  auto sub = [&] { return random_tree(rng, o, depth - 1); };
  if (r < 20) return sub() + sub();
  if (r < 30) return sub() - sub();
  if (r < 42) return random_constant(rng) * sub();
  if (r < 50) return variable(var(rng)) * sub();
  if (r < 55) return power(sub(), 2);
  if (!o.transcendental) {
    if (r < 65) return sqrt_of(constant(1) + power(sub(), 2));
    if (o.nonsmooth && r < 75) return abs_of(sub());
    return sub() + variable(var(rng));
  }
  if (r < 65) return apply(Function::Sin, sub());
  if (r < 72) return apply(Function::Cos, sub());
  if (r < 79) return apply(Function::Arctan, sub());
  if (r < 85) return apply(Function::Exp, constant(Rational(1) / 2) * variable(var(rng)));
  if (r < 90) return apply(Function::Log, constant(1) + power(variable(var(rng)), 2));
  if (r < 95) return sqrt_of(constant(1) + power(variable(var(rng)), 2));
  if (o.nonsmooth) return abs_of(sub());
  return apply(Function::Sin, variable(var(rng)));
}

inline ExprPtr random_tree(std::mt19937_64& rng, const TreeOptions& o = {}) { return random_tree(rng, o, o.depth); }

/// Min and max of f over a regular grid with `per_axis` points per axis.
inline std::pair<double, double> grid_range(const std::function<double(std::span<const double>)>& f, const Box& box,
                                            std::size_t per_axis) {
  const std::size_t n = box.dim();
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (;;) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = per_axis == 1 ? box[i].mid()
                           : box[i].lo + box[i].width() * static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
    const double v = f(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    std::size_t i = 0;
    while (i < n && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == n) break;
  }
  return {lo, hi};
}

inline std::pair<double, double> grid_range(const Expr& t, const Box& box, std::size_t per_axis) {
  return grid_range([&](std::span<const double> x) { return eval(t, x); }, box, per_axis);
}

/// max over a 10^6-point grid of x sin(sqrt x) on [1,500].
inline double schwefel_1d_max() {
  double best = -std::numeric_limits<double>::infinity();
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = 1.0 + 499.0 * i / (n - 1);
    best = std::max(best, x * std::sin(std::sqrt(x)));
  }
  return best;
}

}  // namespace certbound::testing
