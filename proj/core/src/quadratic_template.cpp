#include "certbound/quadratic_template.hpp"

#include "certbound/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace certbound {

double QuadraticForm::operator()(std::span<const double> x) const {
  const std::size_t n = center.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - center[i];
  double q = value;
  for (std::size_t i = 0; i < n; ++i) {
    q += gradient[i] * d[i];
    if (is_curved(i)) q += 0.5 * lambda * d[i] * d[i];
    for (std::size_t j = 0; j < n; ++j) q += 0.5 * d[i] * hessian(i, j) * d[j];
  }
  return q;
}

RationalPoly QuadraticForm::to_polynomial(std::size_t num_vars) const {
  const std::size_t n = center.size();
  std::vector<RationalPoly> d;
  for (std::size_t i = 0; i < n; ++i)
    d.push_back(RationalPoly::variable(num_vars, i) -
                RationalPoly::constant(num_vars, rational_from_double(center[i])));
  RationalPoly q = RationalPoly::constant(num_vars, rational_from_double(value));
  const Rational half_lambda = rational_from_double(lambda) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    if (gradient[i] != 0.0) q += rational_from_double(gradient[i]) * d[i];
    if (lambda != 0.0 && is_curved(i)) q += half_lambda * (d[i] * d[i]);
    for (std::size_t j = 0; j < n; ++j)
      if (hessian(i, j) != 0.0) q += Rational(rational_from_double(hessian(i, j)) / 2) * (d[i] * d[j]);
  }
  return q;
}

Derivatives Derivatives::of(const ExprPtr& t, std::size_t n) {
  Derivatives d;
  d.n = n;
  for (std::size_t i = 0; i < n; ++i) d.gradient.push_back(diff(t, i));
  d.hessian.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      d.hessian[i * n + j] = diff(d.gradient[i], j);
      d.hessian[j * n + i] = d.hessian[i * n + j];
    }
  return d;
}

namespace {

// a + b rounded toward -inf or +inf; exact sums are left alone (TwoSum error term).
double add_down(double a, double b) {
  const double s = a + b, bb = s - a, err = (a - (s - bb)) + (b - bb);
  return err < 0 ? step_down(s) : s;
}
double add_up(double a, double b) {
  const double s = a + b, bb = s - a, err = (a - (s - bb)) + (b - bb);
  return err > 0 ? step_up(s) : s;
}

}  // namespace

std::pair<double, double> gershgorin_bounds(const Matrix<Interval>& d) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double radius = 0.0;
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (j != i) radius = add_up(radius, d(i, j).magnitude());
    lo = std::min(lo, add_down(d(i, i).lo, -radius));
    hi = std::max(hi, add_up(d(i, i).hi, radius));
  }
  if (d.rows() == 0) return {0.0, 0.0};
  return {lo, hi};
}

std::vector<std::vector<double>> halton_points(const Box& box, std::size_t count, std::uint64_t seed) {
  static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                        59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
  const std::size_t n = box.dim();
  if (n > std::size(primes)) throw std::invalid_argument("halton_points: dimension too large");
  std::vector<std::vector<double>> pts;
  const std::uint64_t start = 1 + seed % 100003;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      double f = 1.0, r = 0.0;
      for (std::uint64_t idx = start + k; idx > 0; idx /= primes[i]) {
        f /= primes[i];
        r += f * static_cast<double>(idx % primes[i]);
      }
      p[i] = box[i].lo + r * box[i].width();
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

std::pair<QuadraticForm, QuadraticForm> build_quadratic_form(const ExprPtr& t, const Derivatives& d,
                                                             std::span<const double> xj, const Box& box,
                                                             std::size_t samples, std::uint64_t seed) {
  const std::size_t n = box.dim();
  if (!t->is_smooth()) throw Error(ErrorCategory::Domain, "quadratic form of a non-smooth tree");
  QuadraticForm q;
  q.center.assign(xj.begin(), xj.end());
  q.value = eval(*t, xj);
  q.gradient.resize(n);
  q.hessian = Matrix<double>(n, n);
  const auto occurrences = variable_occurrences(*t, n);
  q.curved.resize(n);
  for (std::size_t i = 0; i < n; ++i) q.curved[i] = occurrences[i] > 0;
  for (std::size_t i = 0; i < n; ++i) q.gradient[i] = eval(*d.gradient[i], xj);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q.hessian(i, j) = eval(*d.hessian[i * n + j], xj);

  // entrywise hull of H(x) - H(x_j) over the samples, x_j itself included
  Matrix<Interval> diffs(n, n, Interval(0.0));
  std::vector<std::vector<double>> pts = halton_points(box, samples, seed);
  // Hessian extremes often sit on the boundary; add the vertices while cheap
  if (n <= 6)
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? box[i].hi : box[i].lo;
      pts.push_back(std::move(v));
    }
  for (const auto& x : pts) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double h;
        try {
          h = eval(*d.hessian[i * n + j], x);
        } catch (const DomainError&) {
          continue;
        }
        if (!std::isfinite(h)) continue;
        diffs(i, j) = hull(diffs(i, j), Interval(h - q.hessian(i, j)));
      }
  }
  const auto [lmin, lmax] = gershgorin_bounds(diffs);
  QuadraticForm lower = q, upper = q;
  lower.lambda = lmin;
  upper.lambda = lmax;
  return {std::move(lower), std::move(upper)};
}

TemplateResult build_template(const ExprPtr& t, const Box& box, std::span<const std::vector<double>> points,
                              const SAEstimator& est, const Interval& enclosure, const TemplateOptions& options) {
  TemplateResult res;
  res.estimator = est;
  if (est.lifting_count() <= options.threshold) return res;
  if (!t->is_smooth() || points.empty()) {
    res.warning = true;
    res.note = t->is_smooth() ? "no control points" : "tree is not smooth";
    return res;
  }
  const std::size_t n = box.dim();
  const Derivatives d = Derivatives::of(t, n);
  std::size_t failures = 0;
  for (std::size_t j = 0; j < points.size(); ++j) {
    auto [qm, qp] = build_quadratic_form(t, d, points[j], box, options.samples, options.seed + j);
    const RationalPoly pm = qm.to_polynomial(est.num_vars());
    const RationalPoly pp = qp.to_polynomial(est.num_vars());
    SABound lo = min_sa(est, est.objective - pm, options.sa);
    SABound hi = max_sa(est, est.objective - pp, options.sa);
    if (lo.degraded && hi.degraded) ++failures;
    res.lower.push_back(std::move(qm));
    res.upper.push_back(std::move(qp));
    res.lower_offsets.push_back(lo.value);
    res.upper_offsets.push_back(hi.value);
    res.offset_bounds.push_back(std::move(lo));
    res.offset_bounds.push_back(std::move(hi));
  }
  if (failures == points.size()) {
    res.warning = true;
    res.note = "every offset subproblem failed";
    res.estimator = est;
    return res;
  }
  SAEstimator out;
  out.box = box;
  out.objective = RationalPoly(n);
  const std::size_t z = add_lifting(out, {"template", t, enclosure});
  const std::size_t total = out.num_vars();
  const RationalPoly zv = RationalPoly::variable(total, z);
  for (std::size_t j = 0; j < points.size(); ++j) {
    // offsets are directed bounds already, so q- + m <= t <= q+ + M holds exactly
    const Rational m = rational_from_double(res.lower_offsets[j]);
    const Rational big_m = rational_from_double(res.upper_offsets[j]);
    out.inequalities.push_back(zv - res.lower[j].to_polynomial(total) - RationalPoly::constant(total, m));
    out.inequalities.push_back(res.upper[j].to_polynomial(total) + RationalPoly::constant(total, big_m) - zv);
  }
  out.objective = zv;
  res.estimator = std::move(out);
  res.applied = true;
  return res;
}

}  // namespace certbound
