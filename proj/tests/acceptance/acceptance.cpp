// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "certbound/cert.hpp"
#include "certbound/optimizer.hpp"
#include "certbound/parser.hpp"
#include "certbound/relax.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

using namespace certbound;
namespace fs = std::filesystem;

namespace {

struct Verdict_ {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Context {
  fs::path problems;
  fs::path tests;
  unsigned jobs = 1;
  std::map<std::string, BoundReport> reports;  // kept for the SDP contract replay
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double grid_min(const Expr& t, const Box& box, std::size_t per_axis) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(box.dim());
  std::vector<std::size_t> idx(box.dim(), 0);
  while (true) {
    for (std::size_t i = 0; i < box.dim(); ++i)
      x[i] = box[i].lo + box[i].width() * static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
    best = std::min(best, eval(t, x));
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return best;
}

double schwefel_1d_max() {
  double best = 0.0;
  for (int i = 0; i <= 1000000; ++i) {
    const double x = 1.0 + 499.0 * i / 1e6;
    best = std::max(best, x * std::sin(std::sqrt(x)));
  }
  return best;
}

BoundReport run(Context& ctx, const std::string& name, const std::string& file, RunConfig cfg) {
  const Problem p = load_problem((ctx.problems / file).string());
  cfg.jobs = ctx.jobs;
  BoundReport rep = certify_bound(p.objective, p.box, cfg, file);
  ctx.reports[name] = rep;
  return rep;
}

void describe(Verdict_& v, const BoundReport& r, double secs) {
  v.detail << r.status << " bound=" << r.global_bound << " boxes=" << r.box_count() << " time=" << secs << "s ";
}

// 1. MC at k = 1, two control points.
Verdict_ criterion_mc(Context& ctx) {
  Verdict_ v;
  RunConfig cfg;
  cfg.order = 1;
  cfg.control_points = 2;
  cfg.max_boxes = 200;
  cfg.target = -1.92;
  const auto t0 = std::chrono::steady_clock::now();
  const BoundReport r = run(ctx, "MC", "mc.prob", cfg);
  const double secs = seconds_since(t0);
  describe(v, r, secs);
  const Problem p = load_problem((ctx.problems / "mc.prob").string());
  double truth = grid_min(*p.objective, p.box, 1000);
  for (const auto& x : local_descent(p.objective, p.box, 4, 0)) truth = std::min(truth, eval(*p.objective, x));
  v.detail << "oracle_min=" << truth;
  v.require(r.proved, "proved");
  v.require(r.box_count() <= 200, "boxes <= 200");
  v.require(secs <= 300, "time <= 5 min");
  v.require(r.global_bound >= -1.92 && r.global_bound <= -1.913, "bound in [-1.92, -1.913]");
  v.require(r.global_bound <= truth, "bound <= oracle minimum");
  return v;
}

// 2. SBT n = 2 at k = 2.
Verdict_ criterion_sbt(Context& ctx) {
  Verdict_ v;
  RunConfig cfg;
  cfg.order = 2;
  cfg.control_points = 2;
  cfg.template_threshold = 4;
  cfg.max_boxes = 500;
  cfg.target = -190;
  const auto t0 = std::chrono::steady_clock::now();
  const BoundReport r = run(ctx, "SBT", "sbt2.prob", cfg);
  const double secs = seconds_since(t0);
  describe(v, r, secs);
  v.require(r.proved, "proved");
  v.require(r.box_count() <= 500, "boxes <= 500");
  v.require(secs <= 900, "time <= 15 min");
  return v;
}

// 3. SWF eps = 0 at n = 2 and n = 3.
Verdict_ criterion_swf(Context& ctx) {
  Verdict_ v;
  const double m1 = schwefel_1d_max();
  v.detail << "oracle_1d_max=" << m1 << " ";
  for (const auto& [file, n] : {std::pair<std::string, int>{"swf2.prob", 2}, {"swf3.prob", 3}}) {
    RunConfig cfg;
    cfg.order = 2;
    cfg.max_boxes = 200;
    cfg.target = -430.0 * n;
    const auto t0 = std::chrono::steady_clock::now();
    const BoundReport r = run(ctx, "SWF-n" + std::to_string(n), file, cfg);
    v.detail << "n=" << n << ": ";
    describe(v, r, seconds_since(t0));
    v.require(r.proved, "n=" + std::to_string(n) + " proved");
    v.require(-430.0 * n <= -m1 * n, "target below the true minimum for n=" + std::to_string(n));
  }
  return v;
}

// 4. Template mode needs strictly fewer boxes than ia_sos on MC.
Verdict_ criterion_ordering(Context& ctx) {
  Verdict_ v;
  RunConfig cfg;
  cfg.order = 1;
  cfg.control_points = 2;
  cfg.max_boxes = 200;
  cfg.target = -1.92;
  const BoundReport tmpl = ctx.reports.count("MC") ? ctx.reports["MC"] : run(ctx, "MC", "mc.prob", cfg);
  cfg.mode = Mode::IaSos;
  const BoundReport base = run(ctx, "MC-ia_sos", "mc.prob", cfg);
  v.detail << "template=" << tmpl.box_count() << " (" << tmpl.status << ") ia_sos=" << base.box_count() << " ("
           << base.status << ")";
  v.require(tmpl.proved, "template proves");
  v.require(tmpl.box_count() < base.box_count(), "template uses fewer boxes");
  return v;
}

// Every Gram entry perturbed by 1/10^6, one at a time, must be rejected.
std::size_t perturbations_accepted(const SOSCertificate& c, std::size_t& tried) {
  const Rational eps = Rational(1) / 1000000;
  std::size_t accepted = 0;
  for (std::size_t j = 0; j < c.grams.size(); ++j)
    for (std::size_t r = 0; r < c.grams[j].rows(); ++r)
      for (std::size_t col = r; col < c.grams[j].cols(); ++col) {
        SOSCertificate bad = c;
        bad.grams[j](r, col) += eps;
        if (r != col) bad.grams[j](col, r) += eps;
        ++tried;
        if (check_certificate(bad).verdict != Verdict::Invalid) ++accepted;
      }
  return accepted;
}

// 5. Certified mode on the analytic instance and the grid-checked quartic.
Verdict_ criterion_certified(Context&) {
  Verdict_ v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto x1 = RationalPoly::variable(2, 0), x2 = RationalPoly::variable(2, 1);
  struct Case {
    std::string name;
    RationalPoly f;
    unsigned order;
    std::optional<Rational> mu;
  };
  const std::vector<Case> cases{
      {"analytic", -(x1 * x1) - x2 * x2, 1, Rational(-2)},
      {"quartic", x1.pow(4) + x2.pow(4) - Rational(3) * x1 * x1 * x2 * x2 + x1, 2, std::nullopt},
  };
  for (const auto& c : cases) {
    POPInstance pop;
    pop.num_vars = 2;
    pop.box = {Interval(-1, 1), Interval(-1, 1)};
    pop.objective = c.f;
    RelaxOptions o;
    o.order = c.order;
    o.gram_shift = 1e-6;
    const Relaxation rel = assemble_Qk(pop, o);
    SDPSolution sol;
    const BoundResult b = solve_relaxation(rel, o, &sol);
    const Rational target = c.mu ? *c.mu / rel.objective_scale : rational_from_double(b.raw_bound) / rel.objective_scale;
    RoundOptions ro;
    ro.backoff = c.mu ? 0.0 : 1e-7;
    const auto cert = round_project(rel, sol, target, ro);
    v.detail << c.name << ": ";
    if (!cert) {
      v.require(false, c.name + " round_project");
      continue;
    }
    const auto res = check_certificate(*cert);
    v.detail << to_string(res.verdict) << " mu=" << cert->original_bound().get_d();
    v.require(res.verdict == Verdict::Valid, c.name + " valid");
    if (c.mu) v.require(cert->original_bound() == *c.mu, c.name + " mu exactly -2");
    std::size_t tried = 0;
    const std::size_t accepted = perturbations_accepted(*cert, tried);
    v.detail << " perturbations_rejected=" << tried - accepted << "/" << tried << " ";
    v.require(accepted == 0, c.name + " every perturbation rejected");
  }
  const double secs = seconds_since(t0);
  v.detail << "time=" << secs << "s";
  v.require(secs <= 60, "time <= 1 min");
  return v;
}

int run_suite(const Context& ctx, const std::string& binary, const std::string& filter) {
  const fs::path exe = ctx.tests / binary;
  if (!fs::exists(exe)) return -1;
  const std::string cmd = "\"" + exe.string() + "\" --gtest_brief=1 --gtest_filter='" + filter + "' > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

// 6. Property suites, run as child processes.
Verdict_ criterion_properties(Context& ctx) {
  Verdict_ v;
  const std::vector<std::pair<std::string, std::string>> suites{
      {"test_estimator", "EstimatorProperty.*:ParabolaProperty.*"},
      {"test_relax", "RelaxProperty.HierarchyMonotone"},
      {"test_interval", "IntervalProperty.SoundnessBySampling"},
      {"test_optimizer", "CertifyBoundProperty.PartitionAndGlobalBound:CertifyBoundProperty.Deterministic"},
      {"test_expr", "DiffProperty.*"},
  };
  for (const auto& [bin, filter] : suites) {
    const int rc = run_suite(ctx, bin, filter);
    v.detail << bin << "=" << (rc == 0 ? "ok" : rc < 0 ? "missing" : "failed") << " ";
    v.require(rc == 0, bin + " " + filter);
  }
  return v;
}

// 7. Constructed SDPs, plus the gap and residual contracts of every
// Optimal SDP behind the leaf bounds of the runs above.
Verdict_ criterion_sdp(Context& ctx) {
  Verdict_ v;
  const int rc = run_suite(ctx, "test_sdp", "SdpConstructed.*");
  v.detail << "constructed=" << (rc == 0 ? "ok" : "failed") << " ";
  v.require(rc == 0, "constructed-solution suite");
  std::size_t optimal = 0, violations = 0, other = 0, replayed = 0;
  for (const auto& name : {"MC", "SWF-n2", "SWF-n3"}) {
    const auto it = ctx.reports.find(name);
    if (it == ctx.reports.end()) continue;
    const BoundReport& rep = it->second;
    const Problem p = load_problem((ctx.problems / rep.problem).string());
    const OptimOptions opts = make_optim_options(rep.config);
    for (const BoxRecord* leaf : rep.leaves()) {
      if (leaf->points.empty()) continue;  // proved by the interval prescreen
      const OptimResult r = template_optim(p.objective, leaf->box, leaf->points, opts);
      ++replayed;
      for (const SABound& d : r.dependencies) {
        const BoundResult& s = d.sdp;
        if (d.source != BoundSource::Sdp || s.status != SDPStatus::Optimal) {
          ++other;
          continue;
        }
        ++optimal;
        const double tol = rep.config.tol * 10;
        if (s.relative_gap > tol || s.primal_residual > tol || s.dual_residual > tol) ++violations;
      }
    }
  }
  v.detail << "leaves=" << replayed << " optimal_sdps=" << optimal << " contract_violations=" << violations << " non_optimal=" << other;
  v.require(optimal > 0, "replayed SDPs");
  v.require(violations == 0, "gap and residual contracts");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certbound acceptance gate"};
  Context ctx;
  std::string problems, tests;
  std::set<int> only;
  app.add_option("--problems", problems, "directory with the bundled problem files")->required();
  app.add_option("--tests", tests, "directory with the unit test binaries")->required();
  app.add_option("--jobs", ctx.jobs, "box-level worker threads");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.problems = problems;
  ctx.tests = tests;

  const std::vector<std::pair<int, std::function<Verdict_(Context&)>>> criteria{
      {1, criterion_mc},         {2, criterion_sbt},        {3, criterion_swf}, {4, criterion_ordering},
      {5, criterion_certified}, {6, criterion_properties}, {7, criterion_sdp},
  };
  bool all = true;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Verdict_ v;
    try {
      v = fn(ctx);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    all = all && v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
