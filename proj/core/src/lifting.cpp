#include "certbound/lifting.hpp"

#include "certbound/error.hpp"

#include <algorithm>
#include <cmath>

namespace certbound {

std::string_view to_string(BoundSource s) noexcept {
  switch (s) {
    case BoundSource::Sdp: return "sdp";
    case BoundSource::Constant: return "constant";
    case BoundSource::Interval: return "interval";
    case BoundSource::Fallback: return "fallback";
  }
  return "?";
}

POPInstance to_pop(const SAEstimator& e, const RationalPoly& objective) {
  if (objective.num_vars() != e.num_vars()) throw std::invalid_argument("objective dimension differs from the estimator");
  POPInstance pop;
  pop.num_vars = e.num_vars();
  pop.box = e.box.sides();
  for (const auto& l : e.liftings) pop.box.push_back(l.bounds);
  pop.objective = objective;
  pop.inequalities = e.inequalities;
  pop.equalities = e.equalities;
  return pop;
}

namespace {

double interval_floor(const SAEstimator& e, const RationalPoly& objective) {
  SAEstimator tmp;
  tmp.box = e.box;
  tmp.liftings = e.liftings;
  tmp.objective = objective;
  return objective_range(tmp).lo;
}

std::vector<double> original_point(const SAEstimator& e, const std::vector<double>& full) {
  std::vector<double> x(e.num_original());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i < full.size() ? e.box[i].clamp(full[i]) : e.box[i].mid();
  return x;
}

SABound certified_bound(const POPInstance& pop, const SAEstimator& e, RelaxOptions relax, const SAOptions& options) {
  SABound out;
  relax.gram_shift = options.cert_gram_shift;
  Relaxation r;
  try {
    r = assemble_Qk(pop, relax);
  } catch (const Error& err) {
    if (err.category() != ErrorCategory::Budget) throw;
    out.value = coefficient_lower_bound(pop);
    out.degraded = true;
    out.note = err.what();
    out.point = original_point(e, {});
    return out;
  }
  if (r.objective.is_constant()) {
    out.value = to_double_down(r.objective.constant_term() * r.objective_scale);
    out.source = BoundSource::Constant;
    out.point = original_point(e, {});
    return out;
  }
  SDPSolution sol;
  out.sdp = solve_relaxation(r, relax, &sol);
  std::vector<double> full(pop.num_vars);
  for (std::size_t i = 0; i < pop.num_vars; ++i) full[i] = pop.box[i].mid();
  for (std::size_t i = 0; i < r.kept.size() && i < out.sdp.moments.point.size(); ++i)
    full[r.kept[i]] = out.sdp.moments.point[r.kept[i]];
  out.point = original_point(e, full);
  if (!out.sdp.degraded) {
    const Rational target = rational_from_double(out.sdp.raw_bound) / r.objective_scale;
    RoundOptions ro;
    ro.backoff = options.cert_backoff;
    if (auto cert = round_project(r, sol, target, ro)) {
      const CertificateCheck check = check_certificate(*cert);
      if (check.verdict == Verdict::Valid) {
        out.value = to_double_down(cert->original_bound());
        out.source = BoundSource::Sdp;
        out.certificate = std::move(cert);
        return out;
      }
      out.note = "certificate rejected: " + check.reason;
    } else {
      out.note = "rounding and projection failed";
    }
  } else {
    out.note = "sdp " + std::string(to_string(out.sdp.status)) + ": " + out.sdp.note;
  }
  out.value = coefficient_lower_bound(pop);
  out.degraded = true;
  return out;
}

}  // namespace

SABound min_sa(const SAEstimator& e, const RationalPoly& objective, const SAOptions& options) {
  const POPInstance pop = to_pop(e, objective);
  RelaxOptions relax = options.relax;
  relax.order = std::max(relax.order, pop.min_order());
  SABound out;
  if (options.certified) {
    out = certified_bound(pop, e, relax, options);
  } else {
    out.sdp = pop_lower_bound(pop, relax);
    out.value = out.sdp.bound;
    out.degraded = out.sdp.degraded;
    out.note = out.sdp.note;
    out.source = out.degraded ? BoundSource::Fallback
                 : out.sdp.note == "constant objective" ? BoundSource::Constant
                                                        : BoundSource::Sdp;
    out.point = original_point(e, out.sdp.moments.point);
  }
  const double box_floor = interval_floor(e, objective);
  if (box_floor > out.value) {
    out.value = box_floor;
    out.source = BoundSource::Interval;
    out.certificate.reset();
  }
  return out;
}

SABound min_sa(const SAEstimator& e, const SAOptions& options) { return min_sa(e, e.objective, options); }

SABound max_sa(const SAEstimator& e, const RationalPoly& objective, const SAOptions& options) {
  SABound out = min_sa(e, -objective, options);
  out.value = -out.value;
  return out;
}

SABound max_sa(const SAEstimator& e, const SAOptions& options) { return max_sa(e, e.objective, options); }

}  // namespace certbound
