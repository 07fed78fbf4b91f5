#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "chance_lab/errors.hpp"

namespace chance_lab {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(long num, unsigned long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Integer to_integer(std::uint64_t v) {
  Integer z;
  mpz_import(z.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return z;
}

// Exact power with a non-negative exponent.
inline Rational pow(const Rational& base, std::uint64_t exp) {
  Rational out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), exp);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), exp);
  out.canonicalize();
  return out;
}

inline Integer pow(const Integer& base, std::uint64_t exp) {
  Integer out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exp);
  return out;
}

// 2^{-n}
inline Rational half_pow(std::uint64_t n) {
  Rational out(1);
  mpz_mul_2exp(out.get_den_mpz_t(), out.get_den_mpz_t(), n);
  return out;
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline bool is_integral(const Rational& r) { return r.get_den() == 1; }

// Parses "p/q", "p" or "-p/q". Decimal points are rejected so that every
// parsed value is exactly what was written.
inline Rational parse_rational(std::string_view text) {
  auto digits = [](std::string_view s, bool allow_sign) {
    if (s.empty()) return false;
    std::size_t i = 0;
    if (allow_sign && (s[0] == '-' || s[0] == '+')) i = 1;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
    }
    return true;
  };
  const auto slash = text.find('/');
  const std::string_view num = text.substr(0, slash);
  const std::string_view den =
      slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
  if (!digits(num, true) || !digits(den, false)) {
    throw ParseError("not an exact rational \"p/q\": '" + std::string(text) + "'");
  }
  std::string n(num);
  if (n[0] == '+') n.erase(0, 1);
  const Integer numerator(n);
  const Integer denominator{std::string(den)};
  if (denominator == 0) throw ParseError("zero denominator: '" + std::string(text) + "'");
  Rational r(numerator, denominator);
  r.canonicalize();
  return r;
}

// Always "numerator/denominator", including integers ("1/1", "0/1").
inline std::string to_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

namespace detail {

inline Integer pow10(long e) {
  Integer out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, static_cast<unsigned long>(e));
  return out;
}

inline Rational scale10(const Rational& r, long e) {
  Rational out(r);
  if (e >= 0) {
    out *= Rational(pow10(e));
  } else {
    out /= Rational(pow10(-e));
  }
  return out;
}

// Round-half-even of a non-negative rational to an integer.
inline Integer round_half_even(const Rational& x) {
  Integer q;
  mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  const Rational twice_rem = (x - Rational(q)) * 2;
  const int c = cmp(twice_rem, Rational(1));
  if (c > 0 || (c == 0 && mpz_odd_p(q.get_mpz_t()))) q += 1;
  return q;
}

}  // namespace detail

// Renders like printf("%.{sig}g") but computed exactly with round-half-even.
inline std::string to_decimal(const Rational& value, int sig = 12) {
  if (value == 0) return "0";
  std::string out = value < 0 ? "-" : "";
  const Rational a = abs(value);

  long e = static_cast<long>(mpz_sizeinbase(a.get_num_mpz_t(), 10)) -
           static_cast<long>(mpz_sizeinbase(a.get_den_mpz_t(), 10));
  // normalize so that 10^e <= a < 10^{e+1}
  while (detail::scale10(Rational(1), e) > a) --e;
  while (detail::scale10(Rational(1), e + 1) <= a) ++e;

  Integer mant = detail::round_half_even(detail::scale10(a, sig - 1 - e));
  if (mant == detail::pow10(sig)) {
    mant /= 10;
    ++e;
  }
  std::string digits = mant.get_str();  // exactly `sig` digits

  auto strip = [](std::string s) {
    if (s.find('.') == std::string::npos) return s;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };

  if (e < -4 || e >= sig) {
    std::string m = digits.substr(0, 1) + "." + digits.substr(1);
    out += strip(m);
    out += 'e';
    out += e < 0 ? '-' : '+';
    std::string ex = std::to_string(e < 0 ? -e : e);
    if (ex.size() < 2) ex = "0" + ex;
    out += ex;
  } else if (e >= 0) {
    std::string m = digits.substr(0, static_cast<std::size_t>(e + 1)) + "." +
                    digits.substr(static_cast<std::size_t>(e + 1));
    out += strip(m);
  } else {
    std::string m = "0." + std::string(static_cast<std::size_t>(-e - 1), '0') + digits;
    out += strip(m);
  }
  return out;
}

// A chance or credence: an exact rational constrained to [0, 1].
class Probability {
 public:
  Probability() = default;

  explicit Probability(Rational value) : value_(std::move(value)) {
    value_.canonicalize();
    if (value_ < 0 || value_ > 1) {
      throw OutOfRange("probability outside [0,1]: " + to_string(value_));
    }
  }

  static Probability zero() { return Probability(); }
  static Probability one() { return Probability(Rational(1)); }

  const Rational& value() const { return value_; }

  Probability complement() const { return Probability(Rational(1 - value_)); }

  friend Probability operator*(const Probability& a, const Probability& b) {
    return Probability(Rational(a.value_ * b.value_));
  }

  friend bool operator==(const Probability& a, const Probability& b) {
    return a.value_ == b.value_;
  }
  friend std::strong_ordering operator<=>(const Probability& a, const Probability& b) {
    return cmp(a.value_, b.value_) <=> 0;
  }

  friend std::ostream& operator<<(std::ostream& os, const Probability& p) {
    return os << to_string(p.value_);
  }

 private:
  Rational value_{0};
};

inline std::string to_string(const Probability& p) { return to_string(p.value()); }

}  // namespace chance_lab
