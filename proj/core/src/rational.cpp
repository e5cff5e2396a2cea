#include "certbound/rational.hpp"
#include "certbound/error.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace certbound {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Budget: return "budget";
    case ErrorCategory::Certification: return "certification";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::Usage: return "usage";
  }
  return "unknown";
}

ParseError::ParseError(const std::string& message, int line, int column)
    : Error(ErrorCategory::Parse,
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite double has no rational value");
  Rational r;
  mpq_set_d(r.get_mpq_t(), value);
  return r;
}

Rational parse_rational(std::string_view text) {
  std::size_t pos = 0;
  auto fail = [&] { throw std::invalid_argument("malformed rational literal '" + std::string(text) + "'"); };
  if (text.empty()) fail();

  const auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) fail();
    Rational r = num / den;
    r.canonicalize();
    return r;
  }

  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  long exponent = 0;
  bool any_digit = false;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    digits.push_back(text[pos++]);
    any_digit = true;
  }
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      digits.push_back(text[pos++]);
      --exponent;
      any_digit = true;
    }
  }
  if (!any_digit) fail();
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    bool exp_negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      exp_negative = text[pos] == '-';
      ++pos;
    }
    long e = 0;
    bool any = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      e = e * 10 + (text[pos++] - '0');
      if (e > 100000) fail();
      any = true;
    }
    if (!any) fail();
    exponent += exp_negative ? -e : e;
  }
  if (pos != text.size()) fail();

  mpz_class mantissa(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  Rational r = exponent >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

std::string to_fraction_string(const Rational& value) {
  if (value.get_den() == 1) return value.get_num().get_str();
  return value.get_num().get_str() + "/" + value.get_den().get_str();
}

double to_double_down(const Rational& value) {
  double d = value.get_d();  // truncates toward zero
  Rational back = rational_from_double(d);
  while (back > value) {
    d = std::nextafter(d, -INFINITY);
    back = rational_from_double(d);
  }
  return d;
}

double to_double_up(const Rational& value) {
  double d = value.get_d();
  Rational back = rational_from_double(d);
  while (back < value) {
    d = std::nextafter(d, INFINITY);
    back = rational_from_double(d);
  }
  return d;
}

Rational floor_to_dyadic(const Rational& value, unsigned bits) {
  mpz_class scale = mpz_class(1) << bits;
  mpz_class scaled_num = value.get_num() * scale;
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), scaled_num.get_mpz_t(), value.get_den().get_mpz_t());
  Rational r(q, scale);
  r.canonicalize();
  return r;
}

Rational round_to_dyadic(double value, unsigned bits) {
  const double scaled = std::ldexp(value, static_cast<int>(bits));
  if (std::fabs(scaled) < 9.0e15) {
    Rational r(mpz_class(static_cast<long>(std::llround(scaled))), mpz_class(1) << bits);
    r.canonicalize();
    return r;
  }
  // the double already has fewer fractional bits than requested
  return rational_from_double(value);
}

std::string to_terminating_decimal(const Rational& value) {
  mpz_class den = value.get_den();
  unsigned twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) { den /= 2; ++twos; }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) { den /= 5; ++fives; }
  if (den != 1) return {};
  const unsigned digits = std::max(twos, fives);
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, digits);
  mpz_class scaled = value.get_num() * pow10 / value.get_den();
  const bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string s = scaled.get_str();
  if (digits > 0) {
    if (s.size() <= digits) s.insert(0, digits - s.size() + 1, '0');
    s.insert(s.size() - digits, ".");
  }
  return negative ? "-" + s : s;
}

}  // namespace certbound
