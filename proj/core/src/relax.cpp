#include "certbound/relax.hpp"

#include "certbound/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace certbound {

namespace {

unsigned half_degree(const RationalPoly& p) { return (p.degree() + 1) / 2; }

// Smallest power of two >= max |coefficient| (1 for the zero polynomial).
Rational dyadic_scale(const RationalPoly& p) {
  const Rational m = p.max_abs_coefficient();
  if (sgn(m) == 0) return Rational(1);
  int e = 0;
  std::frexp(m.get_d(), &e);
  Rational s(1);
  if (e >= 0) {
    mpz_class z;
    mpz_ui_pow_ui(z.get_mpz_t(), 2, static_cast<unsigned long>(e));
    s = Rational(z);
  } else {
    mpz_class z;
    mpz_ui_pow_ui(z.get_mpz_t(), 2, static_cast<unsigned long>(-e));
    s = Rational(mpz_class(1), z);
  }
  while (s < m) s *= 2;
  return s;
}

struct Normalizer {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> new_index;
  std::vector<Rational> offset;
  std::vector<Rational> scale;
  std::vector<Rational> center;
  std::vector<Rational> halfwidth;

  explicit Normalizer(const POPInstance& pop) {
    const std::size_t n = pop.num_vars;
    std::vector<bool> used(n, false);
    auto mark = [&](const RationalPoly& p) {
      for (std::size_t i = 0; i < n; ++i)
        if (!used[i] && p.depends_on(i)) used[i] = true;
    };
    mark(pop.objective);
    for (const auto& g : pop.inequalities) mark(g);
    for (const auto& h : pop.equalities) mark(h);
    new_index.assign(n, 0);
    offset.resize(n);
    scale.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Rational lo = rational_from_double(pop.box[i].lo);
      const Rational hi = rational_from_double(pop.box[i].hi);
      if (used[i] && lo < hi) {
        new_index[i] = kept.size();
        kept.push_back(i);
        offset[i] = (lo + hi) / 2;
        scale[i] = (hi - lo) / 2;
        center.push_back(offset[i]);
        halfwidth.push_back(scale[i]);
      } else {
        offset[i] = lo;
        scale[i] = 0;
      }
    }
  }

  RationalPoly apply(const RationalPoly& p) const {
    RationalPoly s = p.substitute_affine(offset, scale);
    return s.remap(kept.size(), new_index);
  }
};

}  // namespace

void POPInstance::validate() const {
  if (box.size() != num_vars) throw std::invalid_argument("POP box dimension mismatch");
  for (const auto& b : box)
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi)) throw std::invalid_argument("POP box must be finite");
  auto check = [&](const RationalPoly& p) {
    if (p.num_vars() != num_vars) throw std::invalid_argument("POP polynomial dimension mismatch");
  };
  check(objective);
  for (const auto& g : inequalities) check(g);
  for (const auto& h : equalities) check(h);
}

unsigned POPInstance::min_order() const {
  unsigned k = std::max(1u, half_degree(objective));
  for (const auto& g : inequalities) k = std::max(k, half_degree(g));
  for (const auto& h : equalities) k = std::max(k, half_degree(h));
  return k;
}

double coefficient_lower_bound(const POPInstance& pop) {
  Normalizer norm(pop);
  const RationalPoly f = norm.apply(pop.objective);
  Rational bound = f.constant_term();
  for (const auto& [m, c] : f.terms())
    if (!m.is_one()) bound -= abs(c);
  return to_double_down(bound);
}

Relaxation assemble_Qk(const POPInstance& pop, const RelaxOptions& options) {
  pop.validate();
  const unsigned k = options.order;
  if (k < pop.min_order())
    throw std::invalid_argument("relaxation order " + std::to_string(k) + " is below the minimal order " +
                                std::to_string(pop.min_order()));
  Normalizer norm(pop);
  Relaxation r;
  r.order = k;
  r.original_vars = pop.num_vars;
  r.kept = norm.kept;
  r.center = norm.center;
  r.halfwidth = norm.halfwidth;
  r.gram_shift = options.gram_shift;
  const std::size_t n = norm.kept.size();

  RationalPoly f = norm.apply(pop.objective);
  r.objective_scale = dyadic_scale(f);
  r.objective = f * Rational(1 / r.objective_scale);

  auto add_constraint = [&](RationalPoly g) {
    if (g.is_zero()) return;
    if (g.is_constant() && sgn(g.constant_term()) > 0) return;
    const Rational s = dyadic_scale(g);
    r.constraints.push_back(g * Rational(1 / s));
  };
  r.constraints.push_back(RationalPoly::constant(n, Rational(1)));
  for (std::size_t i = 0; i < n; ++i) {
    RationalPoly u = RationalPoly::variable(n, i);
    RationalPoly one = RationalPoly::constant(n, Rational(1));
    add_constraint(one + u);
    add_constraint(one - u);
    add_constraint(one - u * u);
  }
  for (const auto& g : pop.inequalities) add_constraint(norm.apply(g));
  const std::size_t first_equality = r.constraints.size();
  for (const auto& h : pop.equalities) {
    RationalPoly hn = norm.apply(h);
    if (hn.is_zero()) continue;
    add_constraint(hn);
    add_constraint(-hn);
  }

  std::size_t rows = 0;
  for (const auto& g : r.constraints) {
    const unsigned w = half_degree(g);
    if (w > k) throw std::invalid_argument("constraint degree exceeds 2k");
    r.bases.emplace_back(n, k - w);
    rows += r.bases.back().size();
  }
  if (rows > options.max_rows)
    throw Error(ErrorCategory::Budget, "relaxation needs " + std::to_string(rows) + " Gram rows, cap is " +
                                           std::to_string(options.max_rows));
  const std::size_t moments = basis_size(n, 2 * k);
  if (moments - 1 > options.max_constraints)
    throw Error(ErrorCategory::Budget, "relaxation needs " + std::to_string(moments - 1) +
                                           " moment constraints, cap is " + std::to_string(options.max_constraints));
  r.moment_basis = MonomialBasis(n, 2 * k);

  SDPProblem& sdp = r.sdp;
  const std::size_t m = r.moment_basis.size() - 1;
  sdp.constraints.assign(m, {});
  sdp.rhs.assign(m, 0.0);
  std::vector<double> trace(m, 0.0);
  double objective_trace = 0.0;
  for (std::size_t j = 0; j < r.constraints.size(); ++j) {
    const MonomialBasis& basis = r.bases[j];
    sdp.block_sizes.push_back(basis.size());
    std::vector<std::pair<Monomial, double>> terms;
    for (const auto& [mono, c] : r.constraints[j].terms()) terms.emplace_back(mono, c.get_d());
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = a; b < basis.size(); ++b) {
        const Monomial ab = basis[a] * basis[b];
        for (const auto& [gamma, coef] : terms) {
          const std::size_t idx = r.moment_basis.index_of(ab * gamma);
          const SparseEntry e{j, a, b, coef};
          if (idx == 0) {
            sdp.objective.push_back(e);
            if (a == b) objective_trace += coef;
          } else {
            sdp.constraints[idx - 1].push_back(e);
            if (a == b) trace[idx - 1] += coef;
          }
        }
      }
    }
  }
  if (options.equality_penalty > 0)
    for (std::size_t j = first_equality; j < r.constraints.size(); ++j)
      for (std::size_t a = 0; a < r.bases[j].size(); ++a) sdp.objective.push_back({j, a, a, options.equality_penalty});
  for (std::size_t t = 1; t < r.moment_basis.size(); ++t) {
    const double fa = r.objective.coefficient(r.moment_basis[t]).get_d();
    sdp.rhs[t - 1] = fa - options.gram_shift * trace[t - 1];
  }
  (void)objective_trace;
  return r;
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double identity_residual(const Relaxation& r, const SDPSolution& sol) {
  double worst = 0.0;
  for (std::size_t t = 1; t < r.moment_basis.size(); ++t) {
    const double fa = r.objective.coefficient(r.moment_basis[t]).get_d();
    worst = std::max(worst, std::fabs(fa - inner(r.sdp.constraints[t - 1], sol.X)));
  }
  return worst;
}

BoundResult solve_relaxation(const Relaxation& r, const RelaxOptions& options, SDPSolution* out) {
  SDPOptions so;
  so.tol = options.tol;
  so.max_iterations = options.max_iterations;
  SDPSolution sol = solve_sdp(r.sdp, so);
  for (auto& x : sol.X) x.diagonal().array() += r.gram_shift;

  BoundResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.relative_gap = sol.relative_gap;
  res.primal_residual = sol.primal_residual;
  res.dual_residual = sol.dual_residual;

  const double scale = r.objective_scale.get_d();
  const double f0 = r.objective.constant_term().get_d();
  const double mu = f0 - inner(r.sdp.objective, sol.X);
  double residual = 0.0;
  double coef_mass = std::fabs(f0);
  for (std::size_t t = 1; t < r.moment_basis.size(); ++t) {
    const double fa = r.objective.coefficient(r.moment_basis[t]).get_d();
    coef_mass += std::fabs(fa);
    residual += std::fabs(fa - inner(r.sdp.constraints[t - 1], sol.X));
  }
  double psd_violation = 0.0;
  double multiplier_mass = 0.0;
  for (std::size_t j = 0; j < r.constraints.size(); ++j) {
    const double lmin = min_eigenvalue(sol.X[j]);
    const double g1 = r.constraints[j].l1_norm().get_d();
    const double rows = static_cast<double>(r.bases[j].size());
    psd_violation += std::max(0.0, -lmin) * rows * g1;
    multiplier_mass += std::fabs(sol.X[j].trace()) * rows * g1;
  }
  // rounding of the double data and of the floating sums above
  const double eps = std::numeric_limits<double>::epsilon();
  const double slack = 4 * eps * (coef_mass + multiplier_mass) + 1e-13 * (1.0 + std::fabs(mu));
  const double correction = options.kappa * (residual + psd_violation + slack);
  double sdp_bound = (mu - correction) * scale;
  res.raw_bound = mu * scale;
  if (!std::isfinite(sdp_bound)) sdp_bound = -std::numeric_limits<double>::infinity();

  // the coefficient bound is valid irrespective of the solver outcome
  Rational fb = r.objective.constant_term();
  for (const auto& [mono, c] : r.objective.terms())
    if (!mono.is_one()) fb -= abs(c);
  const double fallback = to_double_down(fb * r.objective_scale);
  res.bound = std::max(sdp_bound, fallback);
  res.degraded = sol.status != SDPStatus::Optimal;
  res.note = sol.message;

  // moments z_alpha = -y_alpha, z_0 = 1
  MomentSolution& ms = res.moments;
  ms.moments.assign(r.moment_basis.size(), 0.0);
  ms.moments[0] = 1.0;
  for (std::size_t t = 1; t < r.moment_basis.size(); ++t)
    ms.moments[t] = -sol.y[static_cast<Eigen::Index>(t - 1)];
  ms.point.assign(r.original_vars, 0.0);
  for (std::size_t i = 0; i < r.kept.size(); ++i) {
    const std::size_t t = r.moment_basis.index_of(Monomial::variable(i));
    const double u = std::clamp(ms.moments[t], -1.0, 1.0);
    ms.point[r.kept[i]] = r.center[i].get_d() + r.halfwidth[i].get_d() * u;
  }
  ms.moment_matrix_min_eigenvalue = sol.S.empty() ? 0.0 : min_eigenvalue(sol.S[0]);
  // coordinates that were dropped stay 0; pop_lower_bound fills them from the box
  if (out) *out = std::move(sol);
  return res;
}

BoundResult pop_lower_bound(const POPInstance& pop, const RelaxOptions& options) {
  pop.validate();
  auto fill_point = [&](BoundResult& res, const std::vector<std::size_t>& kept) {
    std::vector<bool> is_kept(pop.num_vars, false);
    for (auto i : kept) is_kept[i] = true;
    res.moments.point.resize(pop.num_vars);
    for (std::size_t i = 0; i < pop.num_vars; ++i)
      if (!is_kept[i]) res.moments.point[i] = pop.box[i].mid();
  };
  Relaxation r;
  try {
    r = assemble_Qk(pop, options);
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::Budget) throw;
    BoundResult res;
    res.bound = coefficient_lower_bound(pop);
    res.degraded = true;
    res.note = e.what();
    fill_point(res, {});
    return res;
  }
  if (r.objective.is_constant()) {
    BoundResult res;
    res.bound = to_double_down(r.objective.constant_term() * r.objective_scale);
    res.raw_bound = res.bound;
    res.status = SDPStatus::Optimal;
    res.note = "constant objective";
    res.moments.moments = {1.0};
    fill_point(res, {});
    return res;
  }
  BoundResult res = solve_relaxation(r, options);
  fill_point(res, r.kept);
  return res;
}

}  // namespace certbound
