#pragma once

// Random inputs and brute-force oracles shared by the test binaries. The
// oracles work from raw generator parameters and never call the library code
// they are used to check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "chance_lab/chance_lab.hpp"

namespace testgen {

using chance_lab::Integer;
using chance_lab::Rational;

using Rng = std::mt19937_64;

inline std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline Rational q(long p, unsigned long d = 1) { return chance_lab::make_rational(p, d); }

inline Rational pow_q(const Rational& r, std::uint64_t n) {
  Rational out(1);
  for (std::uint64_t i = 0; i < n; ++i) out *= r;
  return out;
}

// ---------------------------------------------------------------- measures

struct RawTail {
  Rational c, rho;
  std::uint64_t start;
};

struct RawMeasure {
  std::vector<Rational> head;
  std::vector<RawTail> tails;

  chance_lab::PartitionMeasure build() const {
    std::vector<chance_lab::GeometricTail> t;
    for (const auto& r : tails) t.push_back({r.c, r.rho, r.start});
    return chance_lab::make_partition_measure(head, t, "random");
  }
};

inline Rational oracle_mass(const RawMeasure& m, std::uint64_t n) {
  Rational out(0);
  if (n >= 1 && n <= m.head.size()) out += m.head[n - 1];
  for (const auto& t : m.tails) {
    if (n >= t.start) out += t.c * pow_q(t.rho, n);
  }
  return out;
}

// Head sum plus each tail's geometric series c * rho^start / (1 - rho).
inline Rational oracle_total(const RawMeasure& m) {
  Rational out(0);
  for (const auto& h : m.head) out += h;
  for (const auto& t : m.tails) out += t.c * pow_q(t.rho, t.start) / (1 - t.rho);
  return out;
}

// A random valid measure with a head of length <= 8 and <= 3 tails with
// dyadic ratios, scaled so its total is at most 1. With `deficient` the
// total is strictly below 1, otherwise exactly 1.
inline RawMeasure random_measure(Rng& rng, bool deficient = true) {
  RawMeasure m;
  const std::size_t head_len = uniform(rng, 0, 8);
  for (std::size_t i = 0; i < head_len; ++i) m.head.push_back(q(static_cast<long>(uniform(rng, 0, 6)), 1));
  const std::size_t tails = uniform(rng, head_len == 0 ? 1 : 0, 3);
  for (std::size_t i = 0; i < tails; ++i) {
    const std::uint64_t k = uniform(rng, 1, 4);  // rho = 1/2^k
    m.tails.push_back({q(static_cast<long>(uniform(rng, 1, 5)), 1), q(1, 1ul << k),
                       head_len + uniform(rng, 1, 3)});
  }
  Rational raw = oracle_total(m);
  if (raw == 0) {
    m.head.assign(1, q(1, 2));
    m.tails.clear();
    raw = q(1, 2);
  }
  Rational target = deficient ? q(static_cast<long>(uniform(rng, 1, 15)), 16) : q(1);
  const Rational scale = target / raw;
  for (auto& h : m.head) h *= scale;
  for (auto& t : m.tails) t.c *= scale;
  return m;
}

// ---------------------------------------------------------------- sequences

// Random function n -> prefix values, then a polynomial with small
// nonnegative integer coefficients (constant term >= 1).
inline chance_lab::SequenceFunction random_sequence(Rng& rng) {
  std::vector<Integer> prefix;
  const std::size_t len = uniform(rng, 0, 4);
  for (std::size_t i = 0; i < len; ++i) prefix.emplace_back(static_cast<unsigned long>(uniform(rng, 1, 30)));
  std::vector<Rational> coeffs;
  const std::size_t deg = uniform(rng, 0, 3);
  coeffs.push_back(q(static_cast<long>(uniform(rng, 1, 4))));
  for (std::size_t d = 1; d <= deg; ++d) coeffs.push_back(q(static_cast<long>(uniform(rng, 0, 3))));
  return chance_lab::SequenceFunction::make(std::move(prefix), chance_lab::Polynomial(std::move(coeffs)));
}

// Least N with f(n) < g(n) for all N <= n <= limit, or nullopt if that fails
// at the limit itself. Valid as a dominance oracle when every crossover of
// the generated functions happens well below `limit`.
inline std::optional<std::uint64_t> brute_threshold(const std::function<Integer(std::uint64_t)>& f,
                                                    const std::function<Integer(std::uint64_t)>& g,
                                                    std::uint64_t limit) {
  if (!(f(limit) < g(limit))) return std::nullopt;
  std::uint64_t n = limit;
  while (n > 1 && f(n - 1) < g(n - 1)) --n;
  return n;
}

// ---------------------------------------------------------------- dartboards

struct RawBoard {
  std::vector<chance_lab::SequenceFunction> members;
  std::vector<Rational> weights;
};

inline RawBoard random_board(Rng& rng, std::size_t max_members = 16) {
  RawBoard b;
  const std::size_t k = uniform(rng, 1, max_members);
  std::vector<std::uint64_t> raw;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    b.members.push_back(random_sequence(rng));
    raw.push_back(uniform(rng, 1, 20));
    total += raw.back();
  }
  for (auto w : raw) b.weights.push_back(q(static_cast<long>(w), total));
  return b;
}

// f(n) = K + 1 for the least K with Ch(g(n) <= K) > 1 - 2^{-(n+1)}. The
// cumulative only changes at member values, so only those are tried as K,
// each with a fresh count over the whole board.
inline Integer oracle_quantile(const RawBoard& b, std::uint64_t n) {
  const Rational need = 1 - pow_q(q(1, 2), n + 1);
  std::optional<Integer> best;
  for (const auto& candidate : b.members) {
    const Integer K = candidate(n);
    Rational cum(0);
    for (std::size_t i = 0; i < b.members.size(); ++i) {
      if (b.members[i](n) <= K) cum += b.weights[i];
    }
    if (cum > need && (!best || K < *best)) best = K;
  }
  return *best + 1;
}

// ---------------------------------------------------------------- circle

struct RawCircle {
  std::vector<Rational> breakpoints;
  std::vector<Rational> cdf;
};

inline RawCircle random_circle(Rng& rng) {
  RawCircle c;
  const std::size_t pieces = uniform(rng, 1, 6);
  std::vector<std::uint64_t> cuts;
  for (std::size_t i = 1; i < pieces; ++i) cuts.push_back(uniform(rng, 1, 359));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  c.breakpoints.push_back(q(0));
  for (auto x : cuts) c.breakpoints.push_back(q(static_cast<long>(x)));
  c.breakpoints.push_back(q(360));
  std::vector<std::uint64_t> w;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i + 1 < c.breakpoints.size(); ++i) {
    w.push_back(uniform(rng, 1, 9));  // no flat pieces
    total += w.back();
  }
  c.cdf.push_back(q(0));
  std::uint64_t acc = 0;
  for (auto x : w) {
    acc += x;
    c.cdf.push_back(q(static_cast<long>(acc), total));
  }
  return c;
}

// Linear interpolation of the CDF on [0, 360].
inline Rational oracle_cdf(const RawCircle& c, const Rational& x) {
  for (std::size_t i = 0; i + 1 < c.breakpoints.size(); ++i) {
    const Rational& a = c.breakpoints[i];
    const Rational& b = c.breakpoints[i + 1];
    if (x >= a && x <= b) return c.cdf[i] + (c.cdf[i + 1] - c.cdf[i]) * (x - a) / (b - a);
  }
  return q(1);
}

inline Rational oracle_arc(const RawCircle& c, const Rational& s, const Rational& e) {
  if (s <= e) return oracle_cdf(c, e) - oracle_cdf(c, s);
  return (1 - oracle_cdf(c, s)) + oracle_cdf(c, e);
}

}  // namespace testgen
