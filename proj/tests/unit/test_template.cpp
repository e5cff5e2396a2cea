#include "certbound/expr_poly.hpp"
#include "certbound/optimizer.hpp"
#include "certbound/quadratic_template.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace certbound;
using certbound::testing::random_point;

namespace {

TemplateOptions topts(std::size_t threshold) {
  TemplateOptions o;
  o.threshold = threshold;
  return o;
}

// Convex quadratic with minimizer (0.3, -0.1).
ExprPtr convex_quadratic() {
  const auto a = variable(0) - constant(Rational(3) / 10);
  const auto b = variable(1) + constant(Rational(1) / 10);
  return power(a, 2) + constant(2) * power(b, 2) + constant(Rational(1) / 2) * a * b;
}

}  // namespace

TEST(Gershgorin, Discs) {
  Matrix<Interval> d(2, 2);
  d(0, 0) = Interval(1, 2);
  d(0, 1) = d(1, 0) = Interval(-0.5, 0.5);
  d(1, 1) = Interval(3, 4);
  const auto [lo, hi] = gershgorin_bounds(d);
  EXPECT_DOUBLE_EQ(lo, 0.5);
  EXPECT_DOUBLE_EQ(hi, 4.5);
}

TEST(QuadraticFormTest, SquareIsExact) {
  const auto t = power(variable(0), 2);
  const Box box{Interval(-2, 3)};
  const auto d = Derivatives::of(t, 1);
  for (double xj : {-1.5, 0.0, 2.5}) {
    const std::vector<double> c{xj};
    const auto [qm, qp] = build_quadratic_form(t, d, c, box);
    EXPECT_EQ(qm.lambda, 0.0);
    EXPECT_EQ(qp.lambda, 0.0);
    EXPECT_EQ(qm.to_polynomial(1), to_polynomial(*t, 1));
    EXPECT_EQ(qp.to_polynomial(1), to_polynomial(*t, 1));
  }
}

TEST(QuadraticFormTest, EvaluatesTaylorPlusShift) {
  const auto t = apply(Function::Sin, variable(0) * variable(1));
  const Box box{Interval(0, 1), Interval(0, 2)};
  const auto d = Derivatives::of(t, 2);
  const std::vector<double> c{0.5, 1.0};
  const auto [qm, qp] = build_quadratic_form(t, d, c, box);
  EXPECT_LE(qm.lambda, 0.0);
  EXPECT_GE(qp.lambda, 0.0);
  EXPECT_TRUE(qm.hessian.is_symmetric());
  const std::vector<double> x{0.8, 1.7};
  const double dx = 0.3, dy = 0.7, s = 0.5;  // s = x1 x2 at c
  const double g0 = std::cos(s) * 1.0, g1 = std::cos(s) * 0.5;
  const double h00 = -std::sin(s) * 1.0, h11 = -std::sin(s) * 0.25, h01 = std::cos(s) - std::sin(s) * 0.5;
  const double quad = 0.5 * (h00 * dx * dx + 2 * h01 * dx * dy + h11 * dy * dy);
  const double expect = std::sin(s) + g0 * dx + g1 * dy + quad + 0.5 * qm.lambda * (dx * dx + dy * dy);
  EXPECT_NEAR(qm(x), expect, 1e-12);
  // to_polynomial agrees with operator()
  EXPECT_NEAR(to_real(qm.to_polynomial(2)).evaluate(x), qm(x), 1e-12);
}

// Oracle: the eigenvalues of 10^3 sampled Hessian differences lie inside
// the lambda range.
TEST(QuadraticFormTest, SchwefelLambdaContainsSamples) {
  const auto t = apply(Function::Sin, sqrt_of(variable(0)));
  const Box box{Interval(1, 500)};
  const auto d = Derivatives::of(t, 1);
  const std::vector<double> c{251};
  const auto [qm, qp] = build_quadratic_form(t, d, c, box, 50, 0);
  const double h0 = eval(*d.hessian[0], c);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_point(rng, box);
    const double ev = eval(*d.hessian[0], x) - h0;
    EXPECT_GE(ev, qm.lambda - 1e-12);
    EXPECT_LE(ev, qp.lambda + 1e-12);
  }
}

TEST(QuadraticFormTest, DeterministicForSeed) {
  const auto t = apply(Function::Cos, variable(0) * variable(0) + variable(1));
  const Box box{Interval(-1, 1), Interval(-1, 1)};
  const auto d = Derivatives::of(t, 2);
  const std::vector<double> c{0.1, 0.2};
  const auto a = build_quadratic_form(t, d, c, box, 50, 7);
  const auto b = build_quadratic_form(t, d, c, box, 50, 7);
  EXPECT_EQ(a.first.lambda, b.first.lambda);
  EXPECT_EQ(a.second.lambda, b.second.lambda);
  EXPECT_EQ(halton_points(box, 20, 3), halton_points(box, 20, 3));
  for (const auto& p : halton_points(box, 20, 3)) EXPECT_TRUE(box.contains(p));
}

TEST(Template, BelowThresholdPassesThrough) {
  const auto t = convex_quadratic();
  const Box box{Interval(-1, 1), Interval(-1, 1)};
  const SAEstimator est = polynomial_estimator(to_polynomial(*t, 2), box);
  const std::vector<std::vector<double>> pts{{0.3, -0.1}};
  const auto r = build_template(t, box, pts, est, interval_eval(*t, box), topts(6));
  EXPECT_FALSE(r.applied);
  EXPECT_EQ(r.estimator.objective, est.objective);
  EXPECT_EQ(r.estimator.lifting_count(), 0u);
}

TEST(Template, ConvexQuadraticOffsetVanishes) {
  const auto t = convex_quadratic();
  const Box box{Interval(-1, 1), Interval(-1, 1)};
  const Interval enc = interval_eval(*t, box);
  // Force one lifting so the template kicks in at threshold 0.
  const SAEstimator est = flatten(polynomial_estimator(to_polynomial(*t, 2), box), t, enc);
  ASSERT_EQ(est.lifting_count(), 1u);
  const std::vector<std::vector<double>> pts{{0.3, -0.1}};
  const auto r = build_template(t, box, pts, est, enc, topts(0));
  ASSERT_TRUE(r.applied) << r.note;
  ASSERT_EQ(r.lower_offsets.size(), 1u);
  EXPECT_LT(std::abs(r.lower_offsets[0]), 1e-6);
  EXPECT_LT(std::abs(r.upper_offsets[0]), 1e-6);
  EXPECT_EQ(r.estimator.lifting_count(), 1u);
}

TEST(Template, SchwefelSubtreeCompressed) {
  const auto t = apply(Function::Sin, sqrt_of(variable(0)));
  const Box box{Interval(1, 500)};
  RunConfig cfg;
  cfg.order = 2;
  cfg.template_threshold = 1;
  const std::vector<std::vector<double>> pts{{251}};
  const auto r = template_optim(t, box, pts, make_optim_options(cfg));
  EXPECT_GE(r.templates_applied, 1u);
  EXPECT_EQ(r.estimator.lifting_count(), 1u);
  EXPECT_TRUE(r.estimator.equalities.empty());
  EXPECT_LE(r.lower, -1.0 + 1e-9);
  EXPECT_GE(r.upper, 1.0 - 1e-9);

  // n = 2: 2n liftings and n equalities without templates, at most n and no
  // equalities with them
  const auto x1 = variable(0), x2 = variable(1);
  const auto s2 = apply(Function::Sin, sqrt_of(x1)) + apply(Function::Sin, sqrt_of(x2));
  const Box box2{Interval(1, 500), Interval(1, 500)};
  const std::vector<std::vector<double>> p2{{251, 251}};
  RunConfig off = cfg;
  off.template_threshold = 100;
  const auto plain = template_optim(s2, box2, p2, make_optim_options(off)).estimator;
  EXPECT_EQ(plain.lifting_count(), 4u);
  EXPECT_EQ(plain.equalities.size(), 2u);
  const auto compressed = template_optim(s2, box2, p2, make_optim_options(cfg)).estimator;
  EXPECT_LE(compressed.lifting_count(), 2u);
  EXPECT_TRUE(compressed.equalities.empty());
}

// Property: offsets make every quadratic form a valid under/over-estimator
// at 10^3 sampled points, and the template declares exactly one lifting.
// Threshold 0 forces the template on every tree.
TEST(TemplateProperty, OffsetSoundnessBySampling) {
  const std::vector<ExprPtr> trees{
      apply(Function::Sin, variable(0) + constant(2) * variable(1)) * variable(0),
      apply(Function::Exp, constant(Rational(1) / 2) * variable(0)) - apply(Function::Arctan, variable(0) * variable(1)),
      apply(Function::Cos, power(variable(0), 2)) + variable(1) * apply(Function::Sin, variable(1)),
  };
  const Box box{Interval(-1, 1.5), Interval(-0.5, 1)};
  RunConfig cfg;
  cfg.template_threshold = 1;
  cfg.control_points = 2;
  const std::vector<std::vector<double>> pts{{0.2, 0.1}, {-0.7, 0.8}};
  std::mt19937_64 rng(8);
  for (const auto& t : trees) {
    const auto opt = make_optim_options(cfg);
    const SAEstimator est = template_optim(t, box, pts, [&] {
                              auto o = opt;
                              o.templ.threshold = 100;
                              return o;
                            }()).estimator;
    ASSERT_GE(est.lifting_count(), 1u);
    TemplateOptions force = opt.templ;
    force.threshold = 0;
    const auto r = build_template(t, box, pts, est, interval_eval(*t, box), force);
    ASSERT_TRUE(r.applied) << r.note;
    EXPECT_EQ(r.estimator.lifting_count(), 1u);
    ASSERT_EQ(r.lower.size(), pts.size());
    for (int s = 0; s < 1000; ++s) {
      const auto x = random_point(rng, box);
      const double f = eval(*t, x);
      for (std::size_t j = 0; j < pts.size(); ++j) {
        EXPECT_LE(r.lower[j](x) + r.lower_offsets[j], f + 1e-6) << print(*t);
        EXPECT_GE(r.upper[j](x) + r.upper_offsets[j], f - 1e-6) << print(*t);
      }
      EXPECT_LE(r.estimator.witness_violation(x), 1e-6);
    }
  }
}
