#include "rwre/rational.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <system_error>

#include "rwre/errors.hpp"

namespace rwre {

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw ArgumentError("cannot convert non-finite double to rational");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // x = mant * 2^exp, 0.5 <= |mant| < 1
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  BigInt num = scaled;
  BigInt den = 1;
  if (exp >= 0) {
    num <<= exp;
  } else {
    den <<= -exp;
  }
  return Rational(num, den);
}

namespace {

std::optional<BigInt> parse_int(std::string_view t) {
  if (t.empty()) return std::nullopt;
  bool neg = false;
  if (t.front() == '+' || t.front() == '-') {
    neg = t.front() == '-';
    t.remove_prefix(1);
  }
  if (t.empty()) return std::nullopt;
  BigInt v = 0;
  for (char c : t) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return neg ? BigInt(-v) : v;
}

std::optional<Rational> parse_decimal(std::string_view t) {
  long long exp10 = 0;
  if (auto e = t.find_first_of("eE"); e != std::string_view::npos) {
    auto ex = t.substr(e + 1);
    if (!ex.empty() && ex.front() == '+') ex.remove_prefix(1);
    auto [p, ec] = std::from_chars(ex.data(), ex.data() + ex.size(), exp10);
    if (ec != std::errc() || p != ex.data() + ex.size()) return std::nullopt;
    t = t.substr(0, e);
  }
  std::string digits;
  if (auto dot = t.find('.'); dot != std::string_view::npos) {
    auto frac = t.substr(dot + 1);
    digits = std::string(t.substr(0, dot)) + std::string(frac);
    exp10 -= static_cast<long long>(frac.size());
  } else {
    digits = std::string(t);
  }
  if (digits == "-" || digits == "+" || digits.empty()) return std::nullopt;
  auto mant = parse_int(digits);
  if (!mant) return std::nullopt;
  if (exp10 > 4000 || exp10 < -4000) return std::nullopt;
  BigInt pow10 = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::llabs(exp10)));
  return exp10 >= 0 ? Rational(*mant * pow10) : Rational(*mant, pow10);
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_int(text.substr(0, slash));
    auto den = parse_int(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    return Rational(*num, *den);
  }
  return parse_decimal(text);
}

Rational rational_from_shortest_decimal(double x) {
  if (!std::isfinite(x)) throw ArgumentError("cannot convert non-finite double to rational");
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw ArgumentError("to_chars failed");
  auto r = parse_rational(std::string_view(buf, static_cast<std::size_t>(p - buf)));
  if (!r) throw ArgumentError("unparseable shortest decimal");
  return *r;
}

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double log_of(const Rational& r) {
  if (r <= 0) throw ArgumentError("log of non-positive rational");
  auto log_int = [](const BigInt& v) {
    // v = m * 2^shift with m fitting comfortably in a double.
    const std::size_t bits = boost::multiprecision::msb(v) + 1;
    const std::size_t shift = bits > 60 ? bits - 60 : 0;
    const BigInt top = v >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
  };
  return log_int(boost::multiprecision::numerator(r)) -
         log_int(boost::multiprecision::denominator(r));
}

}  // namespace rwre
