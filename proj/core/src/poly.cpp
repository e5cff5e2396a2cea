#include "certbound/poly.hpp"

#include <cstdio>
#include <functional>

namespace certbound {

Monomial Monomial::variable(std::size_t index, unsigned power) {
  Monomial m;
  m.set(index, power);
  return m;
}

void Monomial::set(std::size_t i, unsigned power) {
  if (i >= kMaxVars) throw std::out_of_range("monomial variable index exceeds kMaxVars");
  if (power > 255) throw std::overflow_error("monomial exponent overflow");
  degree_ = static_cast<std::uint16_t>(degree_ - exps_[i] + power);
  exps_[i] = static_cast<std::uint8_t>(power);
}

std::size_t Monomial::support_end() const noexcept {
  for (std::size_t i = kMaxVars; i > 0; --i)
    if (exps_[i - 1] != 0) return i;
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    const unsigned e = static_cast<unsigned>(exps_[i]) + other.exps_[i];
    if (e > 255) throw std::overflow_error("monomial exponent overflow");
    out.exps_[i] = static_cast<std::uint8_t>(e);
  }
  out.degree_ = static_cast<std::uint16_t>(degree_ + other.degree_);
  return out;
}

std::size_t Monomial::hash() const noexcept {
  // FNV-1a over the exponent bytes
  std::size_t h = 1469598103934665603ull;
  for (auto e : exps_) {
    h ^= e;
    h *= 1099511628211ull;
  }
  return h;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const noexcept {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

std::size_t basis_size(std::size_t num_vars, unsigned degree) {
  // C(n + k, k) computed incrementally; exact for the sizes we use.
  std::size_t result = 1;
  for (unsigned i = 1; i <= degree; ++i) result = result * (num_vars + i) / i;
  return result;
}

MonomialBasis::MonomialBasis(std::size_t num_vars, unsigned degree) : num_vars_(num_vars), degree_(degree) {
  if (num_vars > kMaxVars) throw std::length_error("basis dimension exceeds kMaxVars");
  monomials_.reserve(basis_size(num_vars, degree));
  Monomial current;
  std::function<void(std::size_t, unsigned)> fill = [&](std::size_t var, unsigned remaining) {
    if (var + 1 == num_vars || num_vars == 0) {
      if (num_vars > 0) current.set(var, remaining);
      monomials_.push_back(current);
      if (num_vars > 0) current.set(var, 0);
      return;
    }
    for (unsigned e = remaining + 1; e-- > 0;) {
      current.set(var, e);
      fill(var + 1, remaining - e);
    }
    current.set(var, 0);
  };
  for (unsigned d = 0; d <= degree; ++d) {
    if (num_vars == 0) {
      if (d == 0) monomials_.push_back(Monomial{});
      continue;
    }
    fill(0, d);
  }
  index_.reserve(monomials_.size());
  for (std::size_t i = 0; i < monomials_.size(); ++i) index_.emplace(monomials_[i], i);
}

std::size_t MonomialBasis::index_of(const Monomial& m) const {
  auto it = index_.find(m);
  return it == index_.end() ? npos : it->second;
}

RationalPoly to_rational(const RealPoly& p) {
  RationalPoly out(p.num_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, rational_from_double(c));
  return out;
}

RealPoly to_real(const RationalPoly& p) {
  RealPoly out(p.num_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c.get_d());
  return out;
}

namespace {

std::string monomial_text(const Monomial& m, std::size_t n, std::span<const std::string> names) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += i < names.size() ? names[i] : "x" + std::to_string(i + 1);
    if (m[i] > 1) s += "^" + std::to_string(m[i]);
  }
  return s;
}

template <class C, class Fmt>
std::string render(const Polynomial<C>& p, std::span<const std::string> names, Fmt fmt) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    const bool negative = c < C(0);
    const C magnitude = negative ? C(-c) : c;
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    const std::string mono = monomial_text(m, p.num_vars(), names);
    const std::string coef = fmt(magnitude);
    if (mono.empty()) {
      out += coef;
    } else if (coef == "1") {
      out += mono;
    } else {
      out += coef + "*" + mono;
    }
  }
  return out;
}

}  // namespace

std::string to_string(const RationalPoly& p, std::span<const std::string> names) {
  return render(p, names, [](const Rational& c) { return to_fraction_string(c); });
}

std::string to_string(const RealPoly& p, std::span<const std::string> names) {
  return render(p, names, [](double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", c);
    return std::string(buf);
  });
}

}  // namespace certbound
