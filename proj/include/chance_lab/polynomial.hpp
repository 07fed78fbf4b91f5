#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chance_lab/rational.hpp"

namespace chance_lab {

// Univariate polynomial with exact rational coefficients, low degree first.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Rational> coefficients) : c_(std::move(coefficients)) {
    for (auto& x : c_) x.canonicalize();
    trim();
  }

  static Polynomial constant(const Rational& v) { return Polynomial({v}); }
  static Polynomial monomial(std::size_t degree, const Rational& coef = Rational(1)) {
    std::vector<Rational> c(degree + 1, Rational(0));
    c[degree] = coef;
    return Polynomial(std::move(c));
  }

  const std::vector<Rational>& coefficients() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  // -1 for the zero polynomial
  long degree() const { return static_cast<long>(c_.size()) - 1; }
  Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }

  Rational operator()(const Rational& x) const {
    Rational acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()), Rational(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] += b.c_[i];
    return Polynomial(std::move(c));
  }

  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    return a + b * Rational(-1);
  }

  friend Polynomial operator*(const Polynomial& a, const Rational& s) {
    std::vector<Rational> c = a.c_;
    for (auto& x : c) x *= s;
    return Polynomial(std::move(c));
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> c(a.c_.size() + b.c_.size() - 1, Rational(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    }
    return Polynomial(std::move(c));
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

  // p(x + shift)
  Polynomial shifted(const Rational& shift) const {
    Polynomial out;
    const Polynomial lin({shift, Rational(1)});
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) out = out * lin + constant(*it);
    return out;
  }

  // Newton forward form on the points 0, 1, ..., values.size() - 1.
  static Polynomial interpolate_at_naturals(const std::vector<Rational>& values) {
    std::vector<Rational> diff = values;
    Polynomial out;
    Polynomial falling = constant(Rational(1));  // x (x-1) ... (x-i+1) / i!
    for (std::size_t i = 0; i < values.size(); ++i) {
      out = out + falling * diff[0];
      for (std::size_t j = 0; j + 1 < diff.size() - i; ++j) diff[j] = diff[j + 1] - diff[j];
      falling = falling * Polynomial({Rational(-static_cast<long>(i)), Rational(1)}) *
                Rational(1, static_cast<unsigned long>(i + 1));
    }
    return out;
  }

  // S(m) = p(0) + p(1) + ... + p(m - 1)
  Polynomial prefix_sum() const {
    const std::size_t points = c_.size() + 2;
    std::vector<Rational> values;
    Rational acc(0);
    for (std::size_t m = 0; m < points; ++m) {
      values.push_back(acc);
      acc += (*this)(Rational(static_cast<long>(m)));
    }
    return interpolate_at_naturals(values);
  }

  // Every real root lies below this integer (1 + sum |c_i| / |lead|, rounded
  // up), so the sign of p(n) equals the sign of the leading coefficient for
  // every integer n >= sign_stable_from().
  std::uint64_t sign_stable_from() const {
    if (c_.size() <= 1) return 1;
    Rational s(0);
    for (std::size_t i = 0; i + 1 < c_.size(); ++i) s += abs(c_[i]);
    s /= abs(c_.back());
    s += 1;
    Integer up;
    mpz_cdiv_q(up.get_mpz_t(), s.get_num_mpz_t(), s.get_den_mpz_t());
    return up.get_ui();
  }

  std::string to_string() const {
    if (c_.empty()) return "0";
    std::string out;
    for (std::size_t i = c_.size(); i-- > 0;) {
      if (c_[i] == 0) continue;
      if (!out.empty()) out += c_[i] < 0 ? " - " : " + ";
      else if (c_[i] < 0) out += "-";
      const Rational a = abs(c_[i]);
      const std::string coef = is_integral(a) ? a.get_num().get_str() : chance_lab::to_string(a);
      if (i == 0) {
        out += coef;
      } else {
        if (a != 1) out += coef + "*";
        out += i == 1 ? "n" : "n^" + std::to_string(i);
      }
    }
    return out;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }

  std::vector<Rational> c_;
};

}  // namespace chance_lab
