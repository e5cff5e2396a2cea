#pragma once

#include "certbound/estimator.hpp"
#include "certbound/lifting.hpp"
#include "certbound/matrix.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace certbound {

/// q(x) = value + gradient.(x - c) + 1/2 (x - c)' H (x - c) + lambda/2 |x - c|^2
struct QuadraticForm {
  std::vector<double> center;
  double value = 0.0;
  std::vector<double> gradient;
  Matrix<double> hessian;
  double lambda = 0.0;
  /// Coordinates carrying the lambda term: those the tree depends on (the
  /// Hessian vanishes elsewhere). Empty means all.
  std::vector<bool> curved;

  bool is_curved(std::size_t i) const { return curved.empty() || curved[i]; }
  double operator()(std::span<const double> x) const;
  /// Exact polynomial in the first center.size() of num_vars variables.
  RationalPoly to_polynomial(std::size_t num_vars) const;
};

/// Symbolic gradient and Hessian of a tree, built once and reused for every
/// control point.
struct Derivatives {
  std::vector<ExprPtr> gradient;
  std::vector<ExprPtr> hessian;  // row-major n x n
  std::size_t n = 0;

  static Derivatives of(const ExprPtr& t, std::size_t n);
};

/// Sound eigenvalue enclosure of every symmetric matrix in the interval
/// matrix D by Gershgorin discs: {lambda_min lower bound, lambda_max upper}.
std::pair<double, double> gershgorin_bounds(const Matrix<Interval>& d);

/// `count` points of the Halton sequence mapped into the box, starting at an
/// index derived from the seed.
std::vector<std::vector<double>> halton_points(const Box& box, std::size_t count, std::uint64_t seed);

/// q- and q+ at x_j with lambda from Gershgorin bounds on the sampled
/// Hessian differences H(x) - H(x_j), x in `samples` Halton points of K.
std::pair<QuadraticForm, QuadraticForm> build_quadratic_form(const ExprPtr& t, const Derivatives& d,
                                                             std::span<const double> xj, const Box& box,
                                                             std::size_t samples = 50, std::uint64_t seed = 0);

struct TemplateOptions {
  std::size_t threshold = 6;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  SAOptions sa;
};

struct TemplateResult {
  SAEstimator estimator;
  /// The lifting count exceeded the threshold and the template replaced the input.
  bool applied = false;
  /// Compression was attempted but could not be used.
  bool warning = false;
  std::string note;
  std::vector<QuadraticForm> lower;
  std::vector<QuadraticForm> upper;
  std::vector<double> lower_offsets;
  std::vector<double> upper_offsets;
  /// Offset bounds, lower then upper per control point.
  std::vector<SABound> offset_bounds;
};

/// Replaces `est` by a single lifting z with
///   max_j (q_j- + m_j) <= z <= min_j (q_j+ + M_j),
///   m_j = min_sa(est - q_j-),  M_j = max_sa(est - q_j+),
/// when est has more than `threshold` liftings. `enclosure` must contain
/// the range of t over the box.
TemplateResult build_template(const ExprPtr& t, const Box& box, std::span<const std::vector<double>> points,
                              const SAEstimator& est, const Interval& enclosure, const TemplateOptions& options);

}  // namespace certbound
