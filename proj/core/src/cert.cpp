#include "certbound/cert.hpp"

#include "certbound/error.hpp"
#include "certbound/expr_poly.hpp"
#include "certbound/parser.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace certbound {

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Valid: return "valid";
    case Verdict::Invalid: return "invalid";
    case Verdict::NotApplicable: return "not-applicable";
  }
  return "?";
}

bool is_psd_exact(const Matrix<Rational>& input, std::string* reason) {
  if (input.rows() != input.cols()) {
    if (reason) *reason = "matrix is not square";
    return false;
  }
  Matrix<Rational> a = input;
  const std::size_t n = a.rows();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    // symmetric pivoting on the largest remaining diagonal entry
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (a(perm[i], perm[i]) > a(perm[p], perm[p])) p = i;
    std::swap(perm[k], perm[p]);
    const std::size_t pk = perm[k];
    const Rational d = a(pk, pk);
    if (sgn(d) < 0) {
      if (reason) *reason = "negative pivot at step " + std::to_string(k);
      return false;
    }
    if (sgn(d) == 0) {
      // every remaining diagonal is <= 0 here, so PSD needs the rest to vanish
      for (std::size_t i = k; i < n; ++i)
        for (std::size_t j = k; j < n; ++j)
          if (sgn(a(perm[i], perm[j])) != 0) {
            if (reason) *reason = "zero pivot with a nonzero row at step " + std::to_string(k);
            return false;
          }
      return true;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const std::size_t pi = perm[i];
      if (sgn(a(pi, pk)) == 0) continue;
      const Rational l = a(pi, pk) / d;
      for (std::size_t j = k + 1; j <= i; ++j) {
        const std::size_t pj = perm[j];
        if (sgn(a(pj, pk)) == 0) continue;
        a(pi, pj) -= l * a(pj, pk);
        a(pj, pi) = a(pi, pj);
      }
    }
  }
  return true;
}

namespace {

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

RationalPoly putinar_rhs(const SOSCertificate& c) {
  RationalPoly sum(c.num_vars);
  for (std::size_t j = 0; j < c.constraints.size(); ++j)
    sum += c.constraints[j] * gram_to_poly(c.grams[j], c.bases[j]);
  return sum;
}

void fnv(std::uint64_t& h, std::string_view s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  h ^= 0xff;
  h *= 1099511628211ull;
}

}  // namespace

std::uint64_t problem_hash(const SOSCertificate& c) {
  std::uint64_t h = 1469598103934665603ull;
  fnv(h, std::to_string(c.num_vars));
  fnv(h, std::to_string(c.original_vars));
  fnv(h, to_string(c.objective));
  for (const auto& g : c.constraints) fnv(h, to_string(g));
  for (auto k : c.kept) fnv(h, std::to_string(k));
  for (const auto& v : c.center) fnv(h, to_fraction_string(v));
  for (const auto& v : c.halfwidth) fnv(h, to_fraction_string(v));
  fnv(h, to_fraction_string(c.objective_scale));
  return h;
}

CertificateCheck check_certificate(const SOSCertificate& c) {
  CertificateCheck out;
  auto fail = [&](std::string why) {
    out.verdict = Verdict::Invalid;
    out.reason = std::move(why);
    return out;
  };
  if (c.constraints.size() != c.grams.size() || c.bases.size() != c.grams.size())
    return fail("constraint, basis and Gram counts differ");
  if (c.objective.num_vars() != c.num_vars) return fail("objective dimension mismatch");
  if (c.kept.size() != c.num_vars || c.center.size() != c.num_vars || c.halfwidth.size() != c.num_vars)
    return fail("affine map dimension mismatch");
  if (problem_hash(c) != c.problem_hash) return fail("problem hash mismatch");
  for (std::size_t j = 0; j < c.grams.size(); ++j) {
    if (c.constraints[j].num_vars() != c.num_vars) return fail("constraint " + std::to_string(j) + " dimension mismatch");
    if (c.bases[j].num_vars() != c.num_vars) return fail("basis " + std::to_string(j) + " dimension mismatch");
    if (c.grams[j].rows() != c.bases[j].size() || c.grams[j].cols() != c.bases[j].size())
      return fail("Gram matrix " + std::to_string(j) + " does not match its basis");
    if (!c.grams[j].is_symmetric()) return fail("Gram matrix " + std::to_string(j) + " is not symmetric");
    std::string why;
    if (!is_psd_exact(c.grams[j], &why)) return fail("Gram matrix " + std::to_string(j) + " is not PSD: " + why);
  }
  if (c.constraints.empty() || !(c.constraints[0] == RationalPoly::constant(c.num_vars, Rational(1))))
    return fail("first constraint must be the constant 1");
  const RationalPoly lhs = c.objective - RationalPoly::constant(c.num_vars, c.mu);
  const RationalPoly diff = lhs - putinar_rhs(c);
  if (!diff.is_zero()) {
    const auto& [m, coef] = *diff.terms().begin();
    std::string mono;
    for (std::size_t i = 0; i < c.num_vars; ++i) mono += (i ? "," : "") + std::to_string(m[i]);
    return fail("identity residual " + to_fraction_string(coef) + " at exponent (" + mono + ")");
  }
  out.verdict = Verdict::Valid;
  out.chain = {
      "each Gram matrix is PSD, so each sigma_j = v_j' Q_j v_j is a sum of squares and nonnegative everywhere",
      "each g_j is nonnegative on the normalized feasible set (box forms 1 +- u_i, 1 - u_i^2 on [-1,1]^n, "
      "lifted inequalities, equality pairs)",
      "f - mu = sum_j sigma_j g_j holds coefficientwise over the rationals",
      "hence f >= mu on the normalized feasible set, and f_pop >= mu * objective_scale on K_pop under "
      "x = center + halfwidth * u",
  };
  return out;
}

std::optional<SOSCertificate> round_project(const Relaxation& r, const SDPSolution& sol, const Rational& mu_target,
                                            const RoundOptions& options) {
  if (sol.X.size() != r.constraints.size()) return std::nullopt;
  const std::size_t n = r.kept.size();
  const MonomialBasis& b0 = r.bases[0];
  // number of ordered pairs (u, v) of B_0 with u + v = alpha
  std::vector<std::size_t> count(r.moment_basis.size(), 0);
  for (std::size_t a = 0; a < b0.size(); ++a)
    for (std::size_t b = 0; b < b0.size(); ++b) ++count[r.moment_basis.index_of(b0[a] * b0[b])];

  SOSCertificate cert;
  cert.num_vars = n;
  cert.order = r.order;
  cert.objective = r.objective;
  cert.constraints = r.constraints;
  cert.bases = r.bases;
  cert.original_vars = r.original_vars;
  cert.kept = r.kept;
  cert.center = r.center;
  cert.halfwidth = r.halfwidth;
  cert.objective_scale = r.objective_scale;
  cert.problem_hash = problem_hash(cert);

  for (std::size_t round = 0; round < options.denominator_bits.size(); ++round) {
    const unsigned bits = options.denominator_bits[round];
    const double delta = options.backoff * std::pow(10.0, static_cast<double>(round));
    cert.mu = floor_to_dyadic(Rational(mu_target - rational_from_double(delta)), 60);
    cert.grams.clear();
    for (std::size_t j = 0; j < sol.X.size(); ++j) {
      const auto s = static_cast<std::size_t>(sol.X[j].rows());
      Matrix<Rational> q(s, s);
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = a; b < s; ++b) {
          const double v = 0.5 * (sol.X[j](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                                  sol.X[j](static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)));
          q(a, b) = round_to_dyadic(v, bits);
          q(b, a) = q(a, b);
        }
      cert.grams.push_back(std::move(q));
    }
    // Q_0 := 0 in the residual so the projection rebuilds it from scratch
    Matrix<Rational> q0 = cert.grams[0];
    cert.grams[0] = Matrix<Rational>(b0.size(), b0.size());
    RationalPoly residual = cert.objective - RationalPoly::constant(n, cert.mu) - putinar_rhs(cert);
    // projection: each pair (u,v) with u+v = alpha absorbs (r_alpha - sum Qhat_uv) / count_alpha
    std::vector<Rational> target(r.moment_basis.size());
    for (const auto& [m, c] : residual.terms()) {
      const std::size_t idx = r.moment_basis.index_of(m);
      if (idx == MonomialBasis::npos) {
        target.clear();
        break;
      }
      target[idx] = c;
    }
    if (target.empty()) return std::nullopt;
    std::vector<Rational> current(r.moment_basis.size());
    for (std::size_t a = 0; a < b0.size(); ++a)
      for (std::size_t b = 0; b < b0.size(); ++b) current[r.moment_basis.index_of(b0[a] * b0[b])] += q0(a, b);
    for (std::size_t a = 0; a < b0.size(); ++a)
      for (std::size_t b = 0; b < b0.size(); ++b) {
        const std::size_t idx = r.moment_basis.index_of(b0[a] * b0[b]);
        q0(a, b) += (target[idx] - current[idx]) / Rational(static_cast<long>(count[idx]));
      }
    cert.grams[0] = std::move(q0);
    bool ok = true;
    for (const auto& q : cert.grams)
      if (!is_psd_exact(q)) {
        ok = false;
        break;
      }
    if (ok) return cert;
  }
  return std::nullopt;
}

void write_certificate(std::ostream& out, const SOSCertificate& c) {
  out << "certbound-sos-certificate v1\n";
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.problem_hash));
  out << "hash " << hash << '\n';
  out << "order " << c.order << '\n';
  out << "vars " << c.num_vars << '\n';
  out << "original_vars " << c.original_vars << '\n';
  out << "kept";
  for (auto k : c.kept) out << ' ' << k;
  out << '\n';
  out << "center";
  for (const auto& v : c.center) out << ' ' << to_fraction_string(v);
  out << '\n';
  out << "halfwidth";
  for (const auto& v : c.halfwidth) out << ' ' << to_fraction_string(v);
  out << '\n';
  out << "objective_scale " << to_fraction_string(c.objective_scale) << '\n';
  out << "mu " << to_fraction_string(c.mu) << '\n';
  out << "objective " << to_string(c.objective) << '\n';
  out << "blocks " << c.constraints.size() << '\n';
  for (std::size_t j = 0; j < c.constraints.size(); ++j) {
    out << "block " << j << '\n';
    out << "constraint " << to_string(c.constraints[j]) << '\n';
    out << "basis " << c.bases[j].degree() << ' ' << c.bases[j].size() << '\n';
    for (const auto& m : c.bases[j].monomials()) {
      for (std::size_t i = 0; i < c.num_vars; ++i) out << (i ? " " : "") << m[i];
      out << '\n';
    }
    out << "gram\n";
    for (std::size_t a = 0; a < c.grams[j].rows(); ++a) {
      for (std::size_t b = 0; b <= a; ++b) out << (b ? " " : "") << to_fraction_string(c.grams[j](a, b));
      out << '\n';
    }
  }
  out << "end\n";
}

SOSCertificate read_certificate(std::istream& in) {
  int line_no = 0;
  std::string line;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) throw ParseError("unexpected end of certificate", line_no + 1, 1);
    ++line_no;
    return line;
  };
  auto bad = [&](const std::string& why) { return ParseError(why, line_no, 1); };
  auto keyed = [&](std::string_view key) -> std::string {
    const std::string l = next();
    if (l.rfind(std::string(key), 0) != 0) throw bad("expected '" + std::string(key) + "'");
    return l.size() > key.size() ? l.substr(key.size() + 1) : std::string();
  };
  auto words = [](const std::string& s) {
    std::vector<std::string> w;
    std::istringstream is(s);
    for (std::string t; is >> t;) w.push_back(t);
    return w;
  };
  auto rat = [&](const std::string& s) {
    try {
      return parse_rational(s);
    } catch (const std::invalid_argument&) {
      throw bad("malformed rational '" + s + "'");
    }
  };

  if (next() != "certbound-sos-certificate v1") throw bad("unknown certificate version");
  SOSCertificate c;
  c.problem_hash = std::stoull(keyed("hash"), nullptr, 16);
  c.order = static_cast<unsigned>(std::stoul(keyed("order")));
  c.num_vars = std::stoul(keyed("vars"));
  c.original_vars = std::stoul(keyed("original_vars"));
  for (const auto& w : words(keyed("kept"))) c.kept.push_back(std::stoul(w));
  for (const auto& w : words(keyed("center"))) c.center.push_back(rat(w));
  for (const auto& w : words(keyed("halfwidth"))) c.halfwidth.push_back(rat(w));
  c.objective_scale = rat(keyed("objective_scale"));
  c.mu = rat(keyed("mu"));
  const auto names = default_names(c.num_vars);
  auto poly = [&](const std::string& text) {
    try {
      return to_polynomial(*parse_expression(text, names), c.num_vars);
    } catch (const ParseError& e) {
      throw bad(std::string("malformed polynomial: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw bad(std::string("malformed polynomial: ") + e.what());
    }
  };
  c.objective = poly(keyed("objective"));
  const std::size_t blocks = std::stoul(keyed("blocks"));
  for (std::size_t j = 0; j < blocks; ++j) {
    if (keyed("block") != std::to_string(j)) throw bad("block index out of order");
    c.constraints.push_back(poly(keyed("constraint")));
    const auto bw = words(keyed("basis"));
    if (bw.size() != 2) throw bad("malformed basis header");
    MonomialBasis basis(c.num_vars, static_cast<unsigned>(std::stoul(bw[0])));
    if (basis.size() != std::stoul(bw[1])) throw bad("basis size does not match its degree");
    for (std::size_t t = 0; t < basis.size(); ++t) {
      const auto ex = words(next());
      if (ex.size() != c.num_vars) throw bad("malformed exponent vector");
      Monomial m;
      for (std::size_t i = 0; i < c.num_vars; ++i) m.set(i, static_cast<unsigned>(std::stoul(ex[i])));
      if (!(m == basis[t])) throw bad("basis is not in graded-lex order");
    }
    c.bases.push_back(std::move(basis));
    if (next() != "gram") throw bad("expected 'gram'");
    const std::size_t s = c.bases.back().size();
    Matrix<Rational> q(s, s);
    for (std::size_t a = 0; a < s; ++a) {
      const auto row = words(next());
      if (row.size() != a + 1) throw bad("Gram row has the wrong length");
      for (std::size_t b = 0; b <= a; ++b) {
        q(a, b) = rat(row[b]);
        q(b, a) = q(a, b);
      }
    }
    c.grams.push_back(std::move(q));
  }
  if (next() != "end") throw bad("expected 'end'");
  return c;
}

}  // namespace certbound
