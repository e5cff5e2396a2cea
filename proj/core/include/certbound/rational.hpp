#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace certbound {

using Rational = mpq_class;

/// Exact value of a finite double (every double is a dyadic rational).
Rational rational_from_double(double value);

/// Parses "12", "-3/4", "0.125", "1e-3", "-2.5E+2" exactly.
/// Throws std::invalid_argument on malformed input.
Rational parse_rational(std::string_view text);

/// Canonical "numerator/denominator" form; integers print without "/1".
std::string to_fraction_string(const Rational& value);

/// Nearest double not above / not below the rational.
double to_double_down(const Rational& value);
double to_double_up(const Rational& value);

/// Largest multiple of 2^-bits that is <= value.
Rational floor_to_dyadic(const Rational& value, unsigned bits);
/// Nearest multiple of 2^-bits.
Rational round_to_dyadic(double value, unsigned bits);

/// Exact decimal rendering when the denominator is 2^a 5^b, otherwise empty.
std::string to_terminating_decimal(const Rational& value);

}  // namespace certbound
