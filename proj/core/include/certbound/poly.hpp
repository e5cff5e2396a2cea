#pragma once

#include "certbound/matrix.hpp"
#include "certbound/rational.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace certbound {

/// Upper bound on the number of variables of a single polynomial. Lifted
/// subproblems at desk scale stay far below it.
inline constexpr std::size_t kMaxVars = 32;

class Monomial {
 public:
  Monomial() = default;

  static Monomial variable(std::size_t index, unsigned power = 1);

  unsigned operator[](std::size_t i) const { return exps_[i]; }
  void set(std::size_t i, unsigned power);
  unsigned degree() const noexcept { return degree_; }
  bool is_one() const noexcept { return degree_ == 0; }

  /// Highest variable index with a nonzero exponent, plus one.
  std::size_t support_end() const noexcept;

  Monomial operator*(const Monomial& other) const;

  friend bool operator==(const Monomial& a, const Monomial& b) noexcept { return a.exps_ == b.exps_; }

  std::size_t hash() const noexcept;

 private:
  std::array<std::uint8_t, kMaxVars> exps_{};
  std::uint16_t degree_ = 0;
};

/// Global monomial order: increasing total degree, and within one degree
/// lexicographically decreasing exponents (x1^2 < x1*x2 < x2^2 in listing
/// order). Bases, renderings and certificate files all follow it.
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const noexcept;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept { return m.hash(); }
};

/// All exponent vectors with |alpha| <= degree in the global order.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(std::size_t num_vars, unsigned degree);

  std::size_t num_vars() const noexcept { return num_vars_; }
  unsigned degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return monomials_.size(); }
  const Monomial& operator[](std::size_t i) const { return monomials_[i]; }
  const std::vector<Monomial>& monomials() const noexcept { return monomials_; }

  /// Index of a monomial, or npos when |alpha| exceeds the degree bound.
  std::size_t index_of(const Monomial& m) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t num_vars_ = 0;
  unsigned degree_ = 0;
  std::vector<Monomial> monomials_;
  std::unordered_map<Monomial, std::size_t, MonomialHash> index_;
};

/// C(n + k, k), the size of a full monomial basis.
std::size_t basis_size(std::size_t num_vars, unsigned degree);

inline bool is_zero_coefficient(double c) { return c == 0.0; }
inline bool is_zero_coefficient(const Rational& c) { return sgn(c) == 0; }

/// Sparse multivariate polynomial. Coefficient type is either double (the
/// numeric SDP path) or Rational (exact certificates); the two never mix
/// implicitly, conversion goes through convert_coefficients().
template <class C>
class Polynomial {
 public:
  using Coefficient = C;
  using TermMap = std::map<Monomial, C, GrlexLess>;

  explicit Polynomial(std::size_t num_vars = 0) : num_vars_(num_vars) { check_dimension(num_vars); }

  static Polynomial constant(std::size_t num_vars, const C& value) {
    Polynomial p(num_vars);
    p.add_term(Monomial{}, value);
    return p;
  }
  static Polynomial variable(std::size_t num_vars, std::size_t index) {
    if (index >= num_vars) throw std::out_of_range("variable index out of range");
    Polynomial p(num_vars);
    p.add_term(Monomial::variable(index), C(1));
    return p;
  }
  static Polynomial monomial(std::size_t num_vars, const Monomial& m, const C& coefficient) {
    Polynomial p(num_vars);
    p.add_term(m, coefficient);
    return p;
  }

  std::size_t num_vars() const noexcept { return num_vars_; }
  unsigned degree() const noexcept { return degree_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }
  const TermMap& terms() const noexcept { return terms_; }

  bool is_constant() const noexcept { return degree_ == 0; }
  C constant_term() const { return coefficient(Monomial{}); }

  C coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }

  /// Adds coefficient * m, dropping the term if it cancels.
  void add_term(const Monomial& m, const C& coefficient) {
    if (m.support_end() > num_vars_) throw std::out_of_range("monomial exceeds polynomial dimension");
    if (is_zero_coefficient(coefficient)) return;
    auto [it, inserted] = terms_.try_emplace(m, coefficient);
    if (!inserted) {
      it->second += coefficient;
      if (is_zero_coefficient(it->second)) {
        terms_.erase(it);
        recompute_degree();
        return;
      }
    }
    if (m.degree() > degree_) degree_ = m.degree();
  }

  Polynomial& operator+=(const Polynomial& other) {
    check_same(other);
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& other) {
    check_same(other);
    for (const auto& [m, c] : other.terms_) add_term(m, C(-c));
    return *this;
  }
  Polynomial& operator*=(const C& factor) {
    if (is_zero_coefficient(factor)) {
      terms_.clear();
      degree_ = 0;
      return *this;
    }
    for (auto& [m, c] : terms_) c *= factor;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const C& factor) { return a *= factor; }
  friend Polynomial operator*(const C& factor, Polynomial a) { return a *= factor; }
  Polynomial operator-() const { return *this * C(-1); }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial out(a.num_vars_);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, C(ca * cb));
    return out;
  }

  Polynomial pow(unsigned exponent) const {
    Polynomial result = constant(num_vars_, C(1));
    Polynomial base = *this;
    while (exponent > 0) {
      if (exponent & 1u) result = result * base;
      exponent >>= 1u;
      if (exponent > 0) base = base * base;
    }
    return result;
  }

  C evaluate(std::span<const C> point) const {
    if (point.size() < num_vars_) throw std::invalid_argument("evaluation point has wrong dimension");
    C sum(0);
    for (const auto& [m, c] : terms_) {
      C term = c;
      for (std::size_t i = 0; i < num_vars_; ++i)
        for (unsigned e = 0; e < m[i]; ++e) term *= point[i];
      sum += term;
    }
    return sum;
  }

  /// Renames variable i to index_map[i] in a space of new_num_vars variables.
  Polynomial remap(std::size_t new_num_vars, std::span<const std::size_t> index_map) const {
    if (index_map.size() < num_vars_) throw std::invalid_argument("index map too short");
    Polynomial out(new_num_vars);
    for (const auto& [m, c] : terms_) {
      Monomial mapped;
      for (std::size_t i = 0; i < num_vars_; ++i) {
        if (m[i] == 0) continue;
        if (index_map[i] >= new_num_vars) throw std::out_of_range("remap target out of range");
        mapped.set(index_map[i], mapped[index_map[i]] + m[i]);
      }
      out.add_term(mapped, c);
    }
    return out;
  }

  /// Same polynomial viewed in a larger variable space (new variables appended).
  Polynomial widen(std::size_t new_num_vars) const {
    if (new_num_vars < num_vars_) throw std::invalid_argument("widen cannot shrink");
    Polynomial out = *this;
    out.num_vars_ = new_num_vars;
    check_dimension(new_num_vars);
    return out;
  }

  /// Substitutes x_i -> offset[i] + scale[i] * x_i for every variable.
  Polynomial substitute_affine(std::span<const C> offset, std::span<const C> scale) const {
    std::vector<std::vector<Polynomial>> powers(num_vars_);
    Polynomial out(num_vars_);
    for (const auto& [m, c] : terms_) {
      Polynomial term = constant(num_vars_, c);
      for (std::size_t i = 0; i < num_vars_; ++i) {
        if (m[i] == 0) continue;
        auto& cache = powers[i];
        if (cache.empty()) {
          cache.push_back(constant(num_vars_, C(1)));
        }
        while (cache.size() <= m[i]) {
          Polynomial lin = constant(num_vars_, offset[i]);
          lin.add_term(Monomial::variable(i), scale[i]);
          cache.push_back(cache.back() * lin);
        }
        term = term * cache[m[i]];
      }
      out += term;
    }
    return out;
  }

  /// Sum of absolute values of the coefficients.
  C l1_norm() const {
    C s(0);
    for (const auto& [m, c] : terms_) s += (c < C(0) ? C(-c) : c);
    return s;
  }
  C max_abs_coefficient() const {
    C s(0);
    for (const auto& [m, c] : terms_) {
      C a = c < C(0) ? C(-c) : c;
      if (a > s) s = a;
    }
    return s;
  }

  /// Whether variable i occurs in some term.
  bool depends_on(std::size_t i) const {
    for (const auto& [m, c] : terms_)
      if (m[i] != 0) return true;
    return false;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.num_vars_ == b.num_vars_ && a.terms_ == b.terms_;
  }

 private:
  static void check_dimension(std::size_t n) {
    if (n > kMaxVars) throw std::length_error("polynomial dimension exceeds kMaxVars");
  }
  void check_same(const Polynomial& other) const {
    if (other.num_vars_ != num_vars_) throw std::invalid_argument("polynomial dimension mismatch");
  }
  void recompute_degree() {
    degree_ = 0;
    for (const auto& [m, c] : terms_)
      if (m.degree() > degree_) degree_ = m.degree();
  }

  std::size_t num_vars_ = 0;
  unsigned degree_ = 0;
  TermMap terms_;
};

using RealPoly = Polynomial<double>;
using RationalPoly = Polynomial<Rational>;

RationalPoly to_rational(const RealPoly& p);
RealPoly to_real(const RationalPoly& p);

/// Canonical rendering in the global monomial order, e.g. "1 - 2*x1 + x1^2".
std::string to_string(const RationalPoly& p, std::span<const std::string> names = {});
std::string to_string(const RealPoly& p, std::span<const std::string> names = {});

/// sum_{u,v in basis} Q(u,v) x^(u+v). Throws std::invalid_argument when Q is
/// not symmetric or does not match the basis size.
template <class C>
Polynomial<C> gram_to_poly(const Matrix<C>& gram, const MonomialBasis& basis) {
  if (gram.rows() != basis.size() || gram.cols() != basis.size())
    throw std::invalid_argument("Gram matrix does not match basis size");
  if (!gram.is_symmetric()) throw std::invalid_argument("Gram matrix is not symmetric");
  Polynomial<C> out(basis.num_vars());
  for (std::size_t r = 0; r < basis.size(); ++r) {
    out.add_term(basis[r] * basis[r], gram(r, r));
    for (std::size_t c = r + 1; c < basis.size(); ++c) {
      if (is_zero_coefficient(gram(r, c))) continue;
      out.add_term(basis[r] * basis[c], C(gram(r, c) * C(2)));
    }
  }
  return out;
}

}  // namespace certbound
