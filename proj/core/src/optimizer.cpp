#include "certbound/optimizer.hpp"

#include "certbound/error.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

namespace certbound {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Numeric: return "numeric";
    case Mode::Certified: return "certified";
    case Mode::IaSos: return "ia_sos";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "numeric") return Mode::Numeric;
  if (name == "certified") return Mode::Certified;
  if (name == "ia_sos") return Mode::IaSos;
  throw Error(ErrorCategory::Usage, "unknown mode '" + std::string(name) + "' (numeric, certified, ia_sos)");
}

std::string_view to_string(BoxStatus s) noexcept {
  switch (s) {
    case BoxStatus::Proved: return "proved";
    case BoxStatus::Split: return "split";
    case BoxStatus::Unproved: return "unproved";
  }
  return "?";
}

void RunConfig::validate() const {
  if (order < 1) throw Error(ErrorCategory::Usage, "relaxation order must be >= 1");
  if (max_boxes < 1) throw Error(ErrorCategory::Usage, "max boxes must be >= 1");
  if (template_threshold < 1) throw Error(ErrorCategory::Usage, "template threshold must be >= 1");
  if (control_points < 1) throw Error(ErrorCategory::Usage, "at least one initial control point is required");
  if (!(tol > 0.0) || tol >= 1.0) throw Error(ErrorCategory::Usage, "tolerance must lie in (0, 1)");
  if (jobs < 1) throw Error(ErrorCategory::Usage, "jobs must be >= 1");
  if (iteration_cap < 1) throw Error(ErrorCategory::Usage, "iteration cap must be >= 1");
  if (target && !std::isfinite(*target)) throw Error(ErrorCategory::Usage, "target must be finite");
}

OptimOptions make_optim_options(const RunConfig& cfg) {
  OptimOptions o;
  o.sa.relax.order = cfg.order;
  o.sa.relax.tol = cfg.tol;
  o.sa.certified = cfg.mode == Mode::Certified;
  o.templ.threshold = cfg.template_threshold;
  o.templ.samples = cfg.hessian_samples;
  o.templ.seed = cfg.seed;
  o.templ.sa = o.sa;
  o.ia_sos = cfg.mode == Mode::IaSos;
  return o;
}

namespace {

Interval safe_interval(double lo, double hi) { return lo <= hi ? Interval(lo, hi) : Interval(hi, lo); }

// The objective range is its lifted box range, nothing an SDP could improve.
bool range_is_trivial(const SAEstimator& e) {
  const auto& p = e.objective;
  if (p.degree() > 1) return false;
  if (e.lifting_count() == 0) return true;
  std::size_t used = 0;
  for (std::size_t i = 0; i < p.num_vars(); ++i)
    if (p.depends_on(i)) ++used;
  return used <= 1;
}

struct Node {
  SAEstimator est;
  Interval enclosure;
};

class Builder {
 public:
  Builder(const Box& box, std::span<const std::vector<double>> points, const OptimOptions& options, OptimResult& out)
      : box_(box), points_(points), options_(options), out_(out) {}

  Node build(const ExprPtr& t, bool need_enclosure) {
    const Interval ia = interval_eval(*t, box_);
    SAEstimator est;
    if (t->classification() != ExprClass::Transcendental) {
      est = exact_estimator(t, box_);
    } else {
      switch (t->kind()) {
        case Expr::Kind::Binary: {
          // product and quotient operands become box-bounded liftings
          const bool bounds = t->op() == BinaryOp::Mul || t->op() == BinaryOp::Div;
          Node a = build(t->child_ptr(0), bounds);
          Node b = build(t->child_ptr(1), bounds);
          est = compose_bop(t->op(), {t->child_ptr(0), a.est, a.enclosure}, {t->child_ptr(1), b.est, b.enclosure}, t);
          break;
        }
        case Expr::Kind::Transcendental: est = transcendental(t, ia); break;
        default: {
          std::vector<Operand> ops;
          for (const auto& c : t->children()) {
            Node n = build(c, true);
            ops.push_back({c, std::move(n.est), n.enclosure});
          }
          est = compose_unary(*t, ops, t);
        }
      }
    }
    Interval enclosure = intersect(ia, objective_range(est));
    // The range is taken before templating, where the estimator is tightest;
    // it then also boxes the template lifting.
    if (need_enclosure && !range_is_trivial(est)) {
      SABound lo = min_sa(est, options_.sa);
      SABound hi = max_sa(est, options_.sa);
      enclosure = intersect(enclosure, safe_interval(lo.value, std::max(lo.value, hi.value)));
      out_.dependencies.push_back(std::move(lo));
      out_.dependencies.push_back(std::move(hi));
    }
    if (!options_.ia_sos) {
      TemplateResult tr = build_template(t, box_, points_, est, enclosure, options_.templ);
      if (tr.applied) ++out_.templates_applied;
      if (tr.warning) out_.warnings.push_back(tr.note);
      for (auto& b : tr.offset_bounds) out_.dependencies.push_back(std::move(b));
      est = std::move(tr.estimator);
      enclosure = intersect(enclosure, objective_range(est));
    }
    return {std::move(est), enclosure};
  }

 private:
  SAEstimator transcendental(const ExprPtr& t, const Interval& ia) {
    const Function phi = t->function();
    if (options_.ia_sos) {
      // template-free baseline: the node is a box-bounded variable
      SAEstimator e = polynomial_estimator(RationalPoly(box_.dim()), box_);
      const std::size_t z = add_lifting(e, {"interval", t, ia});
      e.objective = RationalPoly::variable(e.num_vars(), z);
      return e;
    }
    const ExprPtr& child = t->child_ptr(0);
    Node c = build(child, true);
    check_domain(phi, c.enclosure);
    std::vector<double> anchors;
    for (const auto& x : points_) anchors.push_back(c.enclosure.clamp(eval(*child, x)));
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    if (anchors.empty()) anchors.push_back(c.enclosure.mid());
    const ParabolaSet pars = build_par(phi, c.enclosure, anchors);
    return compose(phi, pars, {child, std::move(c.est), c.enclosure}, t);
  }

  const Box& box_;
  std::span<const std::vector<double>> points_;
  const OptimOptions& options_;
  OptimResult& out_;
};

}  // namespace

OptimResult template_optim(const ExprPtr& t, const Box& box, std::span<const std::vector<double>> points,
                           const OptimOptions& options) {
  OptimResult out;
  Builder builder(box, points, options, out);
  Node root = builder.build(t, false);
  out.estimator = std::move(root.est);
  out.root = min_sa(out.estimator, options.sa);
  SABound hi = max_sa(out.estimator, options.sa);
  out.lower = out.root.value;
  out.upper = std::max(hi.value, out.lower);
  out.dependencies.push_back(out.root);
  out.dependencies.push_back(std::move(hi));
  return out;
}

std::vector<std::vector<double>> refine_control_points(const Box& box, std::span<const std::vector<double>> s,
                                                       std::span<const double> point) {
  std::vector<std::vector<double>> out(s.begin(), s.end());
  if (point.size() != box.dim()) return out;
  for (double v : point)
    if (!std::isfinite(v)) return out;
  const std::vector<double> p = box.clamp(point);
  for (const auto& q : s) {
    bool same = true;
    for (std::size_t i = 0; i < p.size() && same; ++i)
      same = std::fabs(p[i] - q[i]) <= 1e-8 * std::max({1.0, std::fabs(p[i]), std::fabs(q[i])});
    if (same) return out;
  }
  out.push_back(p);
  return out;
}

std::vector<std::vector<double>> local_descent(const ExprPtr& t, const Box& box, std::size_t count,
                                               std::uint64_t seed, unsigned steps) {
  const std::size_t n = box.dim();
  auto f = [&](std::span<const double> x) {
    try {
      const double v = eval(*t, x);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  std::vector<std::vector<double>> starts{box.midpoint()};
  for (auto& p : halton_points(box, 7, seed)) starts.push_back(std::move(p));

  std::vector<std::pair<double, std::vector<double>>> found;
  for (auto x : starts) {
    double fx = f(x);
    double step = 0.25 * box.max_width();
    for (unsigned it = 0; it < steps && std::isfinite(fx); ++it) {
      std::vector<double> g(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double h = 1e-7 * std::max(1.0, std::fabs(x[i]));
        std::vector<double> xp = x, xm = x;
        xp[i] = box[i].clamp(x[i] + h);
        xm[i] = box[i].clamp(x[i] - h);
        if (xp[i] > xm[i]) g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i]);
        if (!std::isfinite(g[i])) g[i] = 0.0;
      }
      bool moved = false;
      for (double alpha = step; alpha > 1e-14 * box.max_width(); alpha *= 0.5) {
        std::vector<double> xn(n);
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          xn[i] = box[i].clamp(x[i] - alpha * g[i]);
          decrease += g[i] * (x[i] - xn[i]);
        }
        const double fn = f(xn);
        if (fn < fx - 1e-4 * decrease && xn != x) {
          x = std::move(xn);
          fx = fn;
          step = std::min(2.0 * alpha, box.max_width());
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (std::isfinite(fx)) found.emplace_back(fx, std::move(x));
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<double>> out;
  for (auto& [v, x] : found) {
    bool distinct = true;
    for (const auto& y : out) {
      bool close = true;
      for (std::size_t i = 0; i < n && close; ++i) close = std::fabs(x[i] - y[i]) <= 1e-6 * std::max(box[i].width(), 1e-300);
      if (close) distinct = false;
    }
    if (distinct) out.push_back(std::move(x));
    if (out.size() == count) break;
  }
  if (out.empty()) out.push_back(box.midpoint());
  return out;
}

std::vector<const BoxRecord*> BoundReport::leaves() const {
  std::vector<const BoxRecord*> out;
  for (const auto& b : boxes)
    if (b.status != BoxStatus::Split) out.push_back(&b);
  return out;
}

std::size_t BoundReport::max_lifting() const {
  std::size_t m = 0;
  for (const auto& b : boxes) m = std::max(m, b.lifting_count);
  return m;
}

std::size_t BoundReport::max_control_points() const {
  std::size_t m = 0;
  for (const auto& b : boxes) m = std::max(m, b.points.size());
  return m;
}

namespace {

std::uint64_t box_seed(const Box& box, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (const auto& s : box.sides())
    for (double v : {s.lo, s.hi}) {
      h ^= std::bit_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
  return h;
}

struct Outcome {
  BoxRecord record;
  std::vector<SOSCertificate> certificates;
};

Outcome process_box(const ExprPtr& t, const Box& box, const RunConfig& cfg, const OptimOptions& options) {
  Outcome out;
  BoxRecord& rec = out.record;
  rec.box = box;
  rec.lower = -std::numeric_limits<double>::infinity();
  rec.upper = std::numeric_limits<double>::infinity();
  try {
    const Interval ia = interval_eval(*t, box);
    rec.lower = ia.lo;
    rec.upper = ia.hi;
  } catch (const DomainError& e) {
    rec.note = e.what();
  }
  auto reached = [&] { return cfg.target && rec.lower >= *cfg.target; };
  if (reached()) {
    rec.status = BoxStatus::Proved;
    rec.note = "interval";
    return out;
  }
  std::vector<std::vector<double>> s;
  if (!options.ia_sos) s = local_descent(t, box, cfg.control_points, box_seed(box, cfg.seed));
  std::vector<SABound> best_deps;
  for (unsigned it = 0; it < cfg.iteration_cap; ++it) {
    const double before = rec.lower;
    OptimResult r;
    try {
      r = template_optim(t, box, s, options);
    } catch (const Error& e) {
      rec.note = std::string(to_string(e.category())) + ": " + e.what();
      break;
    }
    ++rec.iterations;
    rec.trace.push_back(r.lower);
    rec.lifting_count = std::max(rec.lifting_count, r.estimator.lifting_count());
    if (r.lower > rec.lower) {
      rec.lower = r.lower;
      best_deps = std::move(r.dependencies);
      rec.note = r.root.degraded ? "degraded: " + r.root.note : std::string(to_string(r.root.source));
    }
    rec.upper = std::min(rec.upper, r.upper);
    if (reached() || options.ia_sos) break;
    // Stagnation: more control points rarely rescue an iteration that closed
    // under a tenth of the gap to the target; subdivision is cheaper.
    if (cfg.target && std::isfinite(before) && rec.lower - before < 0.1 * (*cfg.target - before)) break;
    auto next = refine_control_points(box, s, r.root.point);
    if (next.size() == s.size()) break;
    s = std::move(next);
  }
  rec.points = std::move(s);
  rec.status = reached() ? BoxStatus::Proved : BoxStatus::Unproved;
  for (auto& d : best_deps)
    if (d.certificate) out.certificates.push_back(std::move(*d.certificate));
  return out;
}

bool wider_first(const Box& a, const Box& b) {
  const double wa = a.max_width(), wb = b.max_width();
  if (wa != wb) return wa > wb;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (a[i].lo != b[i].lo) return a[i].lo < b[i].lo;
    if (a[i].hi != b[i].hi) return a[i].hi < b[i].hi;
  }
  return false;
}

}  // namespace

BoundReport certify_bound(const ExprPtr& t, const Box& box, const RunConfig& cfg, std::string problem) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const OptimOptions options = make_optim_options(cfg);
  BoundReport rep;
  rep.problem = std::move(problem);
  rep.config = cfg;

  struct Pending {
    Box box;
    std::size_t parent;
    unsigned depth;
  };
  std::vector<Pending> queue{{box, 0, 0}};
  while (!queue.empty()) {
    std::stable_sort(queue.begin(), queue.end(), [](const Pending& a, const Pending& b) { return wider_first(a.box, b.box); });
    const std::size_t take = std::min<std::size_t>(cfg.jobs, queue.size());
    std::vector<Pending> batch(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(take));
    queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(take));

    std::vector<Outcome> results(batch.size());
    if (batch.size() == 1) {
      results[0] = process_box(t, batch[0].box, cfg, options);
    } else {
      std::vector<std::thread> workers;
      for (std::size_t i = 0; i < batch.size(); ++i)
        workers.emplace_back([&, i] { results[i] = process_box(t, batch[i].box, cfg, options); });
      for (auto& w : workers) w.join();
    }
    // merge in canonical batch order
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Outcome& o = results[i];
      BoxRecord rec = std::move(o.record);
      rec.id = rep.boxes.size();
      rec.parent = rec.id == 0 ? 0 : batch[i].parent;
      rec.depth = batch[i].depth;
      for (std::size_t c = 0; c < o.certificates.size(); ++c) {
        std::string name = "box" + std::to_string(rec.id) + "-" + std::to_string(c) + ".cert";
        rec.certificates.push_back(name);
        rep.certificates.emplace_back(std::move(name), std::move(o.certificates[c]));
      }
      const std::size_t committed = rep.boxes.size() + 1 + queue.size() + (batch.size() - i - 1);
      if (rec.status != BoxStatus::Proved && committed + 2 <= cfg.max_boxes && rec.box.max_width() > 0.0) {
        rec.status = BoxStatus::Split;
        auto [left, right] = rec.box.split(rec.box.widest_coordinate());
        queue.push_back({std::move(left), rec.id, rec.depth + 1});
        queue.push_back({std::move(right), rec.id, rec.depth + 1});
      }
      rep.boxes.push_back(std::move(rec));
    }
  }

  rep.global_bound = std::numeric_limits<double>::infinity();
  rep.global_upper = -std::numeric_limits<double>::infinity();
  bool all = true;
  for (const BoxRecord* leaf : rep.leaves()) {
    rep.global_bound = std::min(rep.global_bound, leaf->lower);
    rep.global_upper = std::max(rep.global_upper, leaf->upper);
    all = all && leaf->status == BoxStatus::Proved;
  }
  rep.proved = cfg.target.has_value() && all;
  rep.status = !cfg.target ? "completed" : rep.proved ? "proved" : "failure";
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

void write_certificates(const BoundReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, cert] : report.certificates) {
    std::ofstream out(std::filesystem::path(dir) / name);
    if (!out) throw Error(ErrorCategory::Usage, "cannot write certificate " + name);
    write_certificate(out, cert);
  }
}

EstimatorCertificateCheck check_estimator_certificates(const BoundReport& report, const std::string& dir) {
  EstimatorCertificateCheck res;
  if (report.config.mode != Mode::Certified) return res;
  for (const auto& rec : report.boxes)
    for (const auto& name : rec.certificates) {
      const auto path = std::filesystem::path(dir) / name;
      std::ifstream in(path);
      if (!in) {
        res.invalid.push_back(name + ": missing");
        continue;
      }
      try {
        const SOSCertificate c = read_certificate(in);
        const CertificateCheck check = check_certificate(c);
        if (check.verdict != Verdict::Valid) res.invalid.push_back(name + ": " + check.reason);
      } catch (const Error& e) {
        res.invalid.push_back(name + ": " + e.what());
      }
      ++res.checked;
    }
  res.verdict = res.invalid.empty() ? Verdict::Valid : Verdict::Invalid;
  return res;
}

}  // namespace certbound
