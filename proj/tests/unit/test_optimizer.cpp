#include "certbound/error.hpp"
#include "certbound/expr_poly.hpp"
#include "certbound/optimizer.hpp"
#include "certbound/parser.hpp"
#include "certbound/relax.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace certbound;
using certbound::testing::grid_range;

namespace {

constexpr double kPi = std::numbers::pi;

const char* kMc = "vars: x1 in [-1.5,4], x2 in [-3,3]\nobjective: sin(x1+x2)+(x1-x2)^2-1.5*x1+2.5*x2+1";

RunConfig mc_config() {
  RunConfig c;
  c.order = 1;
  c.control_points = 2;
  c.max_boxes = 200;
  c.target = -1.92;
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("certbound-" + name + "-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// interiors of two boxes overlap
bool interiors_overlap(const Box& a, const Box& b) {
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a[i].hi <= b[i].lo || b[i].hi <= a[i].lo) return false;
  return true;
}

}  // namespace

TEST(TemplateOptim, PolynomialLeafIsItsOwnEstimator) {
  const auto t = variable(0) * variable(0) - variable(0) * variable(1);
  const Box box{Interval(-1, 1), Interval(-1, 1)};
  RunConfig cfg;
  const std::vector<std::vector<double>> pts{{0, 0}};
  const auto r = template_optim(t, box, pts, make_optim_options(cfg));
  EXPECT_EQ(r.estimator.lifting_count(), 0u);
  EXPECT_EQ(r.estimator.objective, to_polynomial(*t, 2));
  POPInstance pop;
  pop.num_vars = 2;
  pop.box = {Interval(-1, 1), Interval(-1, 1)};
  pop.objective = to_polynomial(*t, 2);
  EXPECT_NEAR(r.lower, pop_lower_bound(pop, RelaxOptions{}).bound, 1e-9);
  EXPECT_LE(r.lower, -0.25 + 1e-9);  // true min -1/4 at (1/2, 1)
}

TEST(TemplateOptim, SinOnHalfPeriod) {
  const Box box{Interval(0, kPi)};
  const std::vector<std::vector<double>> pts{{kPi / 2}};
  const auto r = template_optim(apply(Function::Sin, variable(0)), box, pts, make_optim_options(RunConfig{}));
  // the lifting box carries sin([0,pi]) = [0,1], so m reaches the true min 0
  EXPECT_LE(r.lower, 0.0);
  EXPECT_GE(r.lower, 1 - kPi * kPi / 8 - 1e-9);
  EXPECT_GE(r.upper, 1.0);
  EXPECT_NEAR(r.upper, 1.0, 1e-5);
}

TEST(RefineControlPoints, MomentOfLinearObjective) {
  POPInstance pop;
  pop.num_vars = 1;
  pop.box = {Interval(2, 5)};
  pop.objective = RationalPoly::variable(1, 0);
  const auto b = pop_lower_bound(pop, RelaxOptions{});
  const Box box{Interval(2, 5)};
  const std::vector<std::vector<double>> s{{4.0}};
  const auto next = refine_control_points(box, s, b.moments.point);
  ASSERT_EQ(next.size(), 2u);
  EXPECT_NEAR(next[1][0], 2.0, 1e-5);
}

TEST(RefineControlPoints, DuplicateIgnoredAndClamped) {
  const Box box{Interval(0, 1), Interval(0, 1)};
  const std::vector<std::vector<double>> s{{0.25, 0.5}};
  const std::vector<double> same{0.25 * (1 + 1e-10), 0.5};
  EXPECT_EQ(refine_control_points(box, s, same).size(), 1u);
  const std::vector<double> outside{1.5, -2.0};
  const auto next = refine_control_points(box, s, outside);
  ASSERT_EQ(next.size(), 2u);
  EXPECT_EQ(next[1], (std::vector<double>{1.0, 0.0}));
}

// Oracle: a fine-grid minimizer of MC, (-0.547, -1.547).
TEST(LocalDescent, McMinimizerCandidate) {
  const Problem p = parse_problem(kMc);
  const auto pts = local_descent(p.objective, p.box, 1, 0);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR(pts[0][0], -0.547, 5e-3);
  EXPECT_NEAR(pts[0][1], -1.547, 5e-3);
  EXPECT_NEAR(eval(*p.objective, pts[0]), -1.9133, 1e-3);
}

TEST(CertifyBound, TrivialTargetOneBox) {
  RunConfig cfg;
  cfg.target = -10;
  const auto rep = certify_bound(variable(0), Box{Interval(0, 1)}, cfg);
  EXPECT_TRUE(rep.proved);
  EXPECT_EQ(rep.box_count(), 1u);
  EXPECT_EQ(rep.status, "proved");
}

TEST(CertifyBound, FalseTargetFails) {
  const Problem p = parse_problem(kMc);
  RunConfig cfg = mc_config();
  cfg.target = -1.90;
  cfg.max_boxes = 40;
  const auto rep = certify_bound(p.objective, p.box, cfg);
  EXPECT_FALSE(rep.proved);
  EXPECT_EQ(rep.status, "failure");
  EXPECT_LE(rep.box_count(), 40u);
  const auto [gmin, gmax] = grid_range(*p.objective, p.box, 1000);
  (void)gmax;
  EXPECT_LE(rep.global_bound, gmin);
}

TEST(CertifyBound, McProvedWithinBudget) {
  const Problem p = parse_problem(kMc);
  const auto rep = certify_bound(p.objective, p.box, mc_config());
  EXPECT_TRUE(rep.proved);
  EXPECT_LE(rep.box_count(), 200u);
  EXPECT_GE(rep.global_bound, -1.92);
  EXPECT_LE(rep.global_bound, -1.913);
}

TEST(CertifyBound, TemplateBeatsBaselineOnMc) {
  const Problem p = parse_problem(kMc);
  RunConfig cfg = mc_config();
  const auto tmpl = certify_bound(p.objective, p.box, cfg);
  cfg.mode = Mode::IaSos;
  const auto base = certify_bound(p.objective, p.box, cfg);
  ASSERT_TRUE(tmpl.proved);
  EXPECT_LT(tmpl.box_count(), base.box_count());
}

// Property: leaves tile K, the global bound is the leaf minimum and lies
// below a 10^5-point grid minimum.
TEST(CertifyBoundProperty, PartitionAndGlobalBound) {
  const Problem mc = parse_problem(kMc);
  const Problem swf = parse_problem("vars: x1 in [1,500]\nobjective: -x1*sin(sqrt(x1))");
  for (const Problem* p : {&mc, &swf}) {
    RunConfig cfg;
    cfg.order = p == &mc ? 1 : 2;
    cfg.max_boxes = 25;  // no target: spend the budget
    const auto rep = certify_bound(p->objective, p->box, cfg);
    EXPECT_EQ(rep.status, "completed");
    const auto leaves = rep.leaves();
    double volume = 0.0, lowest = std::numeric_limits<double>::infinity();
    for (const auto* l : leaves) {
      volume += l->box.volume();
      lowest = std::min(lowest, l->lower);
      for (std::size_t i = 0; i < l->box.dim(); ++i) {
        EXPECT_GE(l->box[i].lo, p->box[i].lo);
        EXPECT_LE(l->box[i].hi, p->box[i].hi);
      }
    }
    EXPECT_NEAR(volume, p->box.volume(), 1e-9 * p->box.volume());
    for (std::size_t a = 0; a < leaves.size(); ++a)
      for (std::size_t b = a + 1; b < leaves.size(); ++b)
        EXPECT_FALSE(interiors_overlap(leaves[a]->box, leaves[b]->box)) << a << " " << b;
    EXPECT_EQ(rep.global_bound, lowest);
    const std::size_t per_dim = p->box.dim() == 1 ? 100000 : 317;
    const auto [gmin, gmax] = grid_range(*p->objective, p->box, per_dim);
    EXPECT_LE(rep.global_bound, gmin);
    EXPECT_GE(rep.global_upper, gmax);
  }
}

TEST(CertifyBoundProperty, Deterministic) {
  const Problem p = parse_problem(kMc);
  RunConfig cfg = mc_config();
  cfg.seed = 17;
  const auto a = certify_bound(p.objective, p.box, cfg);
  const auto b = certify_bound(p.objective, p.box, cfg);
  EXPECT_EQ(format_report(a), format_report(b));
  cfg.jobs = 3;
  const auto c = certify_bound(p.objective, p.box, cfg);
  auto strip_jobs = [](std::string s) {
    const auto at = s.find("jobs ");
    if (at != std::string::npos) s.erase(at, s.find('\n', at) - at);
    return s;
  };
  EXPECT_EQ(strip_jobs(format_report(a)), strip_jobs(format_report(c)));
}

// Property: at a fixed box and order, adding a control point does not
// loosen the bound beyond SDP noise (1e-7 relative).
TEST(CertifyBoundProperty, ControlPointMonotone) {
  const Problem p = parse_problem(kMc);
  std::mt19937_64 rng(21);
  RunConfig cfg;
  const auto opts = make_optim_options(cfg);
  for (int trial = 0; trial < 10; ++trial) {
    const Box box = [&] {
      std::vector<Interval> sides;
      for (std::size_t i = 0; i < 2; ++i) {
        std::uniform_real_distribution<double> u(p.box[i].lo, p.box[i].hi);
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        sides.emplace_back(a, std::max(b, a + 0.1));
      }
      return Box(sides);
    }();
    std::vector<std::vector<double>> s{box.midpoint()};
    const double before = template_optim(p.objective, box, s, opts).lower;
    s.push_back(certbound::testing::random_point(rng, box));
    const double after = template_optim(p.objective, box, s, opts).lower;
    // slack scales with the bound: the safety margin is residual-weighted
    EXPECT_GE(after, before - 1e-7 * (1 + std::abs(before))) << "trial " << trial << " on " << to_string(box);
  }
}

TEST(Report, RoundTripIsLossless) {
  const Problem p = parse_problem(kMc);
  RunConfig cfg = mc_config();
  cfg.max_boxes = 12;
  const auto rep = certify_bound(p.objective, p.box, cfg, "mc.prob");
  const std::string text = format_report(rep);
  const BoundReport back = parse_report(text);
  EXPECT_EQ(format_report(back), text);
  EXPECT_EQ(back.box_count(), rep.box_count());
  EXPECT_EQ(back.global_bound, rep.global_bound);
  EXPECT_EQ(back.problem, "mc.prob");
  EXPECT_EQ(back.config.target, rep.config.target);
  const std::string timed = format_report(rep, true);
  EXPECT_EQ(format_report(parse_report(timed), true), timed);
}

TEST(Report, MalformedThrows) {
  EXPECT_THROW(parse_report(""), ParseError);
  EXPECT_THROW(parse_report("certbound-report v9\n"), ParseError);
  const Problem p = parse_problem(kMc);
  RunConfig cfg = mc_config();
  cfg.max_boxes = 3;
  std::string text = format_report(certify_bound(p.objective, p.box, cfg));
  text.resize(text.size() / 2);
  EXPECT_THROW(parse_report(text), ParseError);
}

TEST(RunConfigTest, Validation) {
  RunConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.category() == ErrorCategory::Usage;
    }
    return false;
  };
  EXPECT_TRUE(bad([](RunConfig& c) { c.order = 0; }));
  EXPECT_TRUE(bad([](RunConfig& c) { c.max_boxes = 0; }));
  EXPECT_TRUE(bad([](RunConfig& c) { c.template_threshold = 0; }));
  EXPECT_TRUE(bad([](RunConfig& c) { c.jobs = 0; }));
  EXPECT_TRUE(bad([](RunConfig& c) { c.tol = -1; }));
  EXPECT_THROW(parse_mode("fast"), Error);
  EXPECT_EQ(parse_mode("ia_sos"), Mode::IaSos);
}

TEST(EstimatorCertificates, NumericIsNotApplicable) {
  RunConfig cfg;
  cfg.target = -10;
  const auto rep = certify_bound(variable(0), Box{Interval(0, 1)}, cfg);
  EXPECT_EQ(check_estimator_certificates(rep, ".").verdict, Verdict::NotApplicable);
}

TEST(EstimatorCertificates, CertifiedMcAllValid) {
  const Problem p = parse_problem(kMc);
  RunConfig cfg = mc_config();
  cfg.mode = Mode::Certified;
  const auto rep = certify_bound(p.objective, p.box, cfg);
  EXPECT_TRUE(rep.proved) << rep.status;
  ASSERT_FALSE(rep.certificates.empty());
  const auto dir = scratch_dir("mc");
  write_certificates(rep, dir.string());
  const auto all = check_estimator_certificates(rep, dir.string());
  EXPECT_EQ(all.verdict, Verdict::Valid);
  EXPECT_EQ(all.checked, rep.certificates.size());
  EXPECT_TRUE(all.invalid.empty());

  const std::string victim = rep.certificates.front().first;
  std::filesystem::remove(dir / victim);
  const auto missing = check_estimator_certificates(rep, dir.string());
  EXPECT_EQ(missing.verdict, Verdict::Invalid);
  ASSERT_EQ(missing.invalid.size(), 1u);
  EXPECT_NE(missing.invalid[0].find(victim), std::string::npos);
  std::filesystem::remove_all(dir);
}
