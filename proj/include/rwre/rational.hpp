#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace rwre {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Exact value of a finite double (every finite double is a dyadic rational).
Rational rational_from_double(double x);

// Parses "p/q", an integer, or a decimal literal such as "0.125" or "2.5e-3".
// Returns nullopt on malformed input or zero denominator.
std::optional<Rational> parse_rational(std::string_view text);

// The rational whose decimal expansion is the shortest round-trip
// representation of x (0.7 -> 7/10, not the dyadic neighbour of 0.7).
Rational rational_from_shortest_decimal(double x);

// "p/q" (or "p" when q == 1).
std::string to_string(const Rational& r);

// Natural log of a positive rational without going through a double that
// could underflow.
double log_of(const Rational& r);

}  // namespace rwre
