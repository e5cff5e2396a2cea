#include "certbound/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace certbound {

namespace {

using Blocks = std::vector<Eigen::MatrixXd>;

struct Expanded {
  std::size_t row;
  std::size_t col;
  double value;
};

// Per block, the constraints touching it with their entries expanded to
// both triangles.
struct BlockTerms {
  std::vector<std::size_t> constraint;
  std::vector<std::vector<Expanded>> entries;
};

std::vector<BlockTerms> index_blocks(const SDPProblem& p) {
  std::vector<BlockTerms> out(p.block_sizes.size());
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    for (const auto& e : p.constraints[i]) {
      auto& bt = out[e.block];
      if (bt.constraint.empty() || bt.constraint.back() != i) {
        // entries of one constraint may interleave blocks; merge repeats
        if (!bt.constraint.empty() && std::find(bt.constraint.begin(), bt.constraint.end(), i) != bt.constraint.end()) {
          const auto pos = std::find(bt.constraint.begin(), bt.constraint.end(), i) - bt.constraint.begin();
          auto& list = bt.entries[static_cast<std::size_t>(pos)];
          list.push_back({e.row, e.col, e.value});
          if (e.row != e.col) list.push_back({e.col, e.row, e.value});
          continue;
        }
        bt.constraint.push_back(i);
        bt.entries.emplace_back();
      }
      bt.entries.back().push_back({e.row, e.col, e.value});
      if (e.row != e.col) bt.entries.back().push_back({e.col, e.row, e.value});
    }
  }
  return out;
}

Blocks dense(const SDPProblem& p, const std::vector<SparseEntry>& entries) {
  Blocks out;
  for (auto s : p.block_sizes) out.push_back(Eigen::MatrixXd::Zero(s, s));
  for (const auto& e : entries) {
    out[e.block](e.row, e.col) += e.value;
    if (e.row != e.col) out[e.block](e.col, e.row) += e.value;
  }
  return out;
}

double frobenius(const Blocks& b) {
  double s = 0.0;
  for (const auto& m : b) s += m.squaredNorm();
  return std::sqrt(s);
}

double dot(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

void add_adjoint(const SDPProblem& p, const Eigen::VectorXd& y, Blocks& out, double scale) {
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const double yi = scale * y[static_cast<Eigen::Index>(i)];
    if (yi == 0.0) continue;
    for (const auto& e : p.constraints[i]) {
      out[e.block](e.row, e.col) += yi * e.value;
      if (e.row != e.col) out[e.block](e.col, e.row) += yi * e.value;
    }
  }
}

// Largest alpha with M + alpha dM >= 0 (infinity when unbounded).
double max_step(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& d) {
  Eigen::MatrixXd l_inv_d = chol.matrixL().solve(d);
  Eigen::MatrixXd w = chol.matrixL().solve(l_inv_d.transpose());
  w = 0.5 * (w + w.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_step_blocks(const std::vector<Eigen::LLT<Eigen::MatrixXd>>& chols, const Blocks& d) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < d.size(); ++b) {
    if (d[b].rows() == 1) {
      const double m = chols[b].matrixL()(0, 0);
      const double v = d[b](0, 0);
      if (v < 0) alpha = std::min(alpha, m * m / -v);
      continue;
    }
    alpha = std::min(alpha, max_step(chols[b], d[b]));
  }
  return alpha;
}

}  // namespace

std::string_view to_string(SDPStatus s) noexcept {
  switch (s) {
    case SDPStatus::Optimal: return "optimal";
    case SDPStatus::Infeasible: return "infeasible";
    case SDPStatus::Unbounded: return "unbounded";
    case SDPStatus::Stalled: return "stalled";
  }
  return "?";
}

std::size_t SDPProblem::total_rows() const noexcept {
  std::size_t s = 0;
  for (auto b : block_sizes) s += b;
  return s;
}

void SDPProblem::validate() const {
  if (constraints.empty()) throw std::invalid_argument("SDP needs at least one constraint");
  if (rhs.size() != constraints.size()) throw std::invalid_argument("rhs size does not match constraint count");
  auto check = [&](const std::vector<SparseEntry>& entries) {
    for (const auto& e : entries) {
      if (e.block >= block_sizes.size()) throw std::invalid_argument("entry references a missing block");
      if (e.row > e.col) throw std::invalid_argument("sparse entries must satisfy row <= col");
      if (e.col >= block_sizes[e.block]) throw std::invalid_argument("entry outside its block");
      if (!std::isfinite(e.value)) throw std::invalid_argument("non-finite SDP coefficient");
    }
  };
  check(objective);
  for (const auto& c : constraints) check(c);
  for (auto b : block_sizes)
    if (b == 0) throw std::invalid_argument("empty SDP block");
}

double inner(const std::vector<SparseEntry>& a, const std::vector<Eigen::MatrixXd>& x) {
  double s = 0.0;
  for (const auto& e : a) s += (e.row == e.col ? 1.0 : 2.0) * e.value * x[e.block](e.row, e.col);
  return s;
}

Eigen::VectorXd apply_constraints(const SDPProblem& p, const std::vector<Eigen::MatrixXd>& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(p.constraints.size()));
  for (std::size_t i = 0; i < p.constraints.size(); ++i) out[static_cast<Eigen::Index>(i)] = inner(p.constraints[i], x);
  return out;
}

SDPSolution solve_sdp(const SDPProblem& p, const SDPOptions& opt) {
  p.validate();
  const std::size_t nb = p.block_sizes.size();
  const auto m = static_cast<Eigen::Index>(p.constraints.size());
  const double n_total = static_cast<double>(p.total_rows());
  const auto blocks = index_blocks(p);
  const Blocks C = dense(p, p.objective);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) b[i] = p.rhs[static_cast<std::size_t>(i)];
  const double norm_b = b.norm();
  const double norm_c = frobenius(C);

  // CSDP-style starting point scaled by the data.
  double alpha0 = 0.0;
  double beta0 = norm_c;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    double na = 0.0;
    for (const auto& e : p.constraints[i]) na += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    na = std::sqrt(na);
    alpha0 = std::max(alpha0, (1.0 + std::fabs(b[static_cast<Eigen::Index>(i)])) / (1.0 + na));
    beta0 = std::max(beta0, na);
  }
  alpha0 = 10.0 * std::max(1.0, std::sqrt(n_total) * alpha0);
  beta0 = 10.0 * std::max(1.0, (1.0 + beta0) / std::sqrt(n_total));

  SDPSolution sol;
  Blocks X, S;
  for (auto s : p.block_sizes) {
    X.push_back(alpha0 * Eigen::MatrixXd::Identity(s, s));
    S.push_back(beta0 * Eigen::MatrixXd::Identity(s, s));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  auto residuals = [&](Eigen::VectorXd& rp, Blocks& Rd) {
    rp = b - apply_constraints(p, X);
    Rd = C;
    for (std::size_t k = 0; k < nb; ++k) Rd[k] -= S[k];
    add_adjoint(p, y, Rd, -1.0);
  };

  auto finish = [&](SDPStatus status, std::string message) {
    Eigen::VectorXd rp;
    Blocks Rd;
    residuals(rp, Rd);
    sol.status = status;
    sol.message = std::move(message);
    sol.primal_objective = dot(C, X);
    sol.dual_objective = b.dot(y);
    sol.relative_gap = std::fabs(sol.primal_objective - sol.dual_objective) /
                       (1.0 + std::fabs(sol.primal_objective) + std::fabs(sol.dual_objective));
    sol.primal_residual = rp.norm() / (1.0 + norm_b);
    sol.dual_residual = frobenius(Rd) / (1.0 + norm_c);
    sol.X = std::move(X);
    sol.S = std::move(S);
    sol.y = std::move(y);
    return sol;
  };

  int small_steps = 0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    sol.iterations = iter;
    Eigen::VectorXd rp;
    Blocks Rd;
    residuals(rp, Rd);
    const double pobj = dot(C, X);
    const double dobj = b.dot(y);
    const double mu = dot(X, S) / n_total;
    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = frobenius(Rd) / (1.0 + norm_c);
    const double gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj) + std::fabs(dobj));
    if (opt.record_history) sol.history.push_back({pobj, dobj, pinf, dinf, mu});
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu))
      return finish(SDPStatus::Stalled, "numerical failure: non-finite iterate");
    if (gap <= opt.tol && pinf <= opt.tol && dinf <= opt.tol) return finish(SDPStatus::Optimal, "converged");
    if (y.lpNorm<Eigen::Infinity>() > 1e13 && dobj > 1e10 * (1.0 + std::fabs(pobj)))
      return finish(SDPStatus::Infeasible, "primal infeasible: dual ray detected");
    double xmax = 0.0;
    for (const auto& xb : X) xmax = std::max(xmax, xb.lpNorm<Eigen::Infinity>());
    if (xmax > 1e13 && pobj < -1e10)
      return finish(SDPStatus::Unbounded, "primal unbounded: primal ray detected");

    // Z = S^-1, Cholesky factors of X and S for the step lengths
    Blocks Z(nb);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> cx(nb), cs(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      cx[k].compute(X[k]);
      cs[k].compute(S[k]);
      if (cx[k].info() != Eigen::Success || cs[k].info() != Eigen::Success)
        return finish(SDPStatus::Stalled, "numerical failure: iterate lost definiteness");
      Z[k] = cs[k].solve(Eigen::MatrixXd::Identity(X[k].rows(), X[k].cols()));
      Z[k] = 0.5 * (Z[k] + Z[k].transpose().eval());
    }

    // Schur complement M_ij = tr(A_i X A_j Z)
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& bt = blocks[k];
      const Eigen::MatrixXd& Xk = X[k];
      const Eigen::MatrixXd& Zk = Z[k];
      for (std::size_t a = 0; a < bt.constraint.size(); ++a) {
        const auto& ea = bt.entries[a];
        const auto ia = static_cast<Eigen::Index>(bt.constraint[a]);
        for (std::size_t c = a; c < bt.constraint.size(); ++c) {
          const auto& ec = bt.entries[c];
          double s = 0.0;
          for (const auto& e : ea)
            for (const auto& f : ec) s += e.value * f.value * Xk(e.col, f.row) * Zk(f.col, e.row);
          const auto ic = static_cast<Eigen::Index>(bt.constraint[c]);
          M(ia, ic) += s;
          if (ia != ic) M(ic, ia) += s;
        }
      }
    }
    Eigen::LLT<Eigen::MatrixXd> chol_m(M);
    if (chol_m.info() != Eigen::Success) {
      const double reg = 1e-14 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
      M.diagonal().array() += reg;
      chol_m.compute(M);
      if (chol_m.info() != Eigen::Success)
        return finish(SDPStatus::Stalled, "numerical failure: Schur complement not positive definite");
    }

    Blocks XRdZ(nb);
    for (std::size_t k = 0; k < nb; ++k) XRdZ[k] = X[k] * Rd[k] * Z[k];

    auto direction = [&](double sigma, const Blocks* corr, Blocks& dX, Eigen::VectorXd& dy, Blocks& dS) {
      Blocks G(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        G[k] = sigma * mu * Z[k] - X[k] - XRdZ[k];
        if (corr) G[k] -= (*corr)[k];
        G[k] = 0.5 * (G[k] + G[k].transpose().eval());
      }
      dy = chol_m.solve(rp - apply_constraints(p, G));
      dS = Rd;
      add_adjoint(p, dy, dS, -1.0);
      dX.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        Eigen::MatrixXd t = sigma * mu * Z[k] - X[k] - X[k] * dS[k] * Z[k];
        if (corr) t -= (*corr)[k];
        dX[k] = 0.5 * (t + t.transpose().eval());
      }
    };

    // predictor
    Blocks dXa, dSa;
    Eigen::VectorXd dya;
    direction(0.0, nullptr, dXa, dya, dSa);
    const double ap = std::min(1.0, max_step_blocks(cx, dXa));
    const double ad = std::min(1.0, max_step_blocks(cs, dSa));
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mu_aff += ((X[k] + ap * dXa[k]).cwiseProduct(S[k] + ad * dSa[k])).sum();
    mu_aff /= n_total;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // corrector
    Blocks corr(nb);
    for (std::size_t k = 0; k < nb; ++k) corr[k] = dXa[k] * dSa[k] * Z[k];
    Blocks dX, dS;
    Eigen::VectorXd dy;
    direction(sigma, &corr, dX, dy, dS);
    double sp = std::min(1.0, 0.98 * max_step_blocks(cx, dX));
    double sd = std::min(1.0, 0.98 * max_step_blocks(cs, dS));
    // rounding can push a near-boundary step out of the cone; back off until
    // both factorizations succeed
    auto advance = [&](const Blocks& from, const Blocks& d, double& step) {
      Blocks next(nb);
      for (int tries = 0; tries < 40; ++tries) {
        bool ok = true;
        for (std::size_t k = 0; k < nb && ok; ++k) {
          next[k] = from[k] + step * d[k];
          next[k] = 0.5 * (next[k] + next[k].transpose().eval());
          ok = Eigen::LLT<Eigen::MatrixXd>(next[k]).info() == Eigen::Success;
        }
        if (ok) return next;
        step *= 0.5;
      }
      step = 0.0;
      return from;
    };
    X = advance(X, dX, sp);
    S = advance(S, dS, sd);
    y += sd * dy;

    if (std::max(sp, sd) < 1e-8) {
      if (++small_steps >= 5) {
        sol.iterations = iter + 1;
        return finish(SDPStatus::Stalled, "stalled: step lengths collapsed");
      }
    } else {
      small_steps = 0;
    }
  }
  sol.iterations = opt.max_iterations;
  return finish(SDPStatus::Stalled, "stalled: iteration limit reached");
}

void write_sdp_dump(std::ostream& out, const SDPProblem& p) {
  out << "sdp " << p.block_sizes.size() << ' ' << p.constraints.size() << '\n';
  out << "blocks";
  for (auto s : p.block_sizes) out << ' ' << s;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < p.rhs.size(); ++i) out << "rhs " << i + 1 << ' ' << p.rhs[i] << '\n';
  auto dump = [&](std::size_t idx, const std::vector<SparseEntry>& entries) {
    for (const auto& e : entries)
      out << idx << ' ' << e.block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
  };
  dump(0, p.objective);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) dump(i + 1, p.constraints[i]);
}

}  // namespace certbound
