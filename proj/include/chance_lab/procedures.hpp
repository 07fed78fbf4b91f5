#pragma once

// Desk-scale chance procedures: a spinner with a piecewise-linear CDF over
// exact rational degrees, finite coin-flip prefixes, the spin-until-hit
// lottery, and rotation of the integer angle sets N_a = {n mod 2pi : n >= a}.
//
// Only the arc algebra of the circle is represented; chances of arbitrary
// subsets are not.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chance_lab/errors.hpp"
#include "chance_lab/rational.hpp"

namespace chance_lab {

inline const Rational& full_turn() {
  static const Rational turn(360);
  return turn;
}

// Continuous CDF F on [0, 360] through (breakpoint_i, cdf_i), linear between.
// Continuity means no single angle carries chance.
class CircleChanceModel {
 public:
  static CircleChanceModel make(std::vector<Rational> breakpoints, std::vector<Rational> cdf) {
    if (breakpoints.size() < 2 || breakpoints.size() != cdf.size()) {
      throw InvalidCircleModel("need matching breakpoint and cdf lists with >= 2 entries");
    }
    for (auto& x : breakpoints) x.canonicalize();
    for (auto& x : cdf) x.canonicalize();
    if (breakpoints.front() != 0 || breakpoints.back() != full_turn()) {
      throw InvalidCircleModel("breakpoints must run from 0 to 360 degrees");
    }
    if (cdf.front() != 0 || cdf.back() != 1) {
      throw InvalidCircleModel("cdf must run from 0 to 1");
    }
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
      if (!(breakpoints[i - 1] < breakpoints[i])) {
        throw InvalidCircleModel("breakpoints must be strictly increasing at index " +
                                 std::to_string(i));
      }
      if (cdf[i] < cdf[i - 1]) {
        throw InvalidCircleModel("cdf decreases at index " + std::to_string(i));
      }
    }
    CircleChanceModel m;
    m.breakpoints_ = std::move(breakpoints);
    m.cdf_ = std::move(cdf);
    return m;
  }

  static CircleChanceModel uniform() { return make({Rational(0), Rational(360)}, {Rational(0), Rational(1)}); }

  const std::vector<Rational>& breakpoints() const { return breakpoints_; }
  const std::vector<Rational>& cdf_values() const { return cdf_; }

  // F(angle) for angle in [0, 360]
  Rational cdf(const Rational& angle) const {
    if (angle < 0 || angle > full_turn()) {
      throw OutOfRange("angle " + to_string(angle) + " outside [0,360]");
    }
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), angle);
    if (it == breakpoints_.end()) return cdf_.back();
    const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
    const Rational& x0 = breakpoints_[i - 1];
    const Rational& x1 = breakpoints_[i];
    return cdf_[i - 1] + (cdf_[i] - cdf_[i - 1]) * (angle - x0) / (x1 - x0);
  }

  // lim_{x -> angle^-} F(x). Equal to F(angle) for every piecewise-linear F.
  Rational left_limit(const Rational& angle) const {
    if (angle == 0) return Rational(0);
    return cdf(angle);
  }

 private:
  std::vector<Rational> breakpoints_;
  std::vector<Rational> cdf_;
};

// Half-open [start, end) in degrees. end < start wraps through 0; end may be
// 360. start == end is only allowed for the explicit empty arc.
class Arc {
 public:
  static Arc make(Rational start, Rational end) {
    start.canonicalize();
    end.canonicalize();
    if (start < 0 || start >= full_turn()) {
      throw InvalidArc("arc start " + to_string(start) + " outside [0,360)");
    }
    if (end < 0 || end > full_turn()) throw InvalidArc("arc end " + to_string(end) + " outside [0,360]");
    if (start == end) throw InvalidArc("degenerate arc at " + to_string(start));
    Arc a;
    a.start_ = std::move(start);
    a.end_ = std::move(end);
    if (a.end_ == full_turn() && a.start_ == 0) a.full_ = true;
    return a;
  }

  static Arc empty() {
    Arc a;
    a.empty_ = true;
    return a;
  }
  static Arc full() { return make(Rational(0), Rational(360)); }

  // The arc of the given width centred on point (width in (0, 360]).
  static Arc around(const Rational& point, const Rational& width) {
    if (width >= full_turn()) return full();
    auto wrap = [](Rational x) {
      while (x < 0) x += full_turn();
      while (x >= full_turn()) x -= full_turn();
      return x;
    };
    const Rational half = width / 2;
    Rational start = wrap(point - half);
    Rational end = wrap(point + half);
    if (end == 0) end = full_turn();
    return make(std::move(start), std::move(end));
  }

  const Rational& start() const { return start_; }
  const Rational& end() const { return end_; }
  bool is_empty() const { return empty_; }
  bool full_circle() const { return full_; }
  bool wraps() const { return !empty_ && end_ < start_; }

  Rational width() const {
    if (empty_) return Rational(0);
    return wraps() ? Rational(full_turn() - start_ + end_) : Rational(end_ - start_);
  }

  bool contains(const Rational& angle) const {
    if (empty_) return false;
    if (wraps()) return angle >= start_ || angle < end_;
    return angle >= start_ && angle < end_;
  }

 private:
  Rational start_{0};
  Rational end_{0};
  bool empty_ = false;
  bool full_ = false;
};

// F(end) - F(start), split in two when the arc wraps.
inline Probability arc_chance(const CircleChanceModel& model, const Arc& arc) {
  if (arc.is_empty()) return Probability::zero();
  if (arc.wraps()) {
    return Probability(Rational(model.cdf(full_turn()) - model.cdf(arc.start()) +
                                model.cdf(arc.end()) - model.cdf(Rational(0))));
  }
  return Probability(Rational(model.cdf(arc.end()) - model.cdf(arc.start())));
}

// F(angle) - F(angle^-): zero for any continuous CDF.
inline Probability singleton_chance(const CircleChanceModel& model, const Rational& angle) {
  if (angle < 0 || angle >= full_turn()) {
    throw OutOfRange("angle " + to_string(angle) + " outside [0,360)");
  }
  const Rational jump = model.cdf(angle) - model.left_limit(angle);
  if (jump != 0) throw AtomDetected("angle " + to_string(angle) + " carries chance " + to_string(jump));
  return Probability::zero();
}

struct ShrinkingArc {
  std::uint64_t level = 0;  // k
  Arc arc;
  Probability chance;
  Probability bound;  // x / 2^k
};

// Nested arcs A_1 ⊃ A_2 ⊃ ... around point with chance(A_k) < x / 2^k,
// x = chance(initial). Each width is found by halving from the previous width
// until the bound holds, then bisecting between the passing and failing
// widths to keep the arc as wide as the bound allows.
inline std::vector<ShrinkingArc> shrinking_arcs(const CircleChanceModel& model,
                                                const Rational& point, std::uint64_t depth,
                                                std::optional<Arc> initial = std::nullopt,
                                                int refine_steps = 16) {
  if (point < 0 || point >= full_turn()) {
    throw OutOfRange("point " + to_string(point) + " outside [0,360)");
  }
  if (depth == 0) throw OutOfRange("depth must be >= 1");
  const Arc start_arc = initial.value_or(Arc::full());
  if (!start_arc.contains(point)) throw InvalidArc("initial arc does not contain the point");
  const Rational x = arc_chance(model, start_arc).value();

  // Symmetric arcs around the point must stay inside the initial arc.
  Rational max_width = start_arc.width();
  if (!start_arc.full_circle()) {
    auto dist = [](const Rational& from, const Rational& to) {
      Rational d = to - from;
      if (d < 0) d += full_turn();
      return d;
    };
    const Rational left = dist(start_arc.start(), point);
    const Rational right = dist(point, start_arc.end());
    max_width = 2 * std::min(left, right);
    if (max_width == 0) throw InvalidArc("point sits on the initial arc's start");
  }

  std::vector<ShrinkingArc> out;
  Rational width = max_width;
  for (std::uint64_t k = 1; k <= depth; ++k) {
    const Rational bound = x * half_pow(k);
    Rational failing = width;
    Rational passing = width / 2;
    int halvings = 0;
    while (!(arc_chance(model, Arc::around(point, passing)).value() < bound)) {
      failing = passing;
      passing /= 2;
      if (++halvings > 4096) {
        throw AtomDetected("no arc around " + to_string(point) + " has chance below " +
                           to_string(bound));
      }
    }
    for (int i = 0; i < refine_steps; ++i) {
      const Rational mid = (passing + failing) / 2;
      if (arc_chance(model, Arc::around(point, mid)).value() < bound) {
        passing = mid;
      } else {
        failing = mid;
      }
    }
    width = passing;
    Arc arc = Arc::around(point, width);
    Probability chance = arc_chance(model, arc);
    out.push_back({k, std::move(arc), std::move(chance), Probability(bound)});
  }
  return out;
}

enum class CoinFace { Heads, Tails };

inline std::vector<CoinFace> parse_coin_prefix(std::string_view text) {
  std::vector<CoinFace> out;
  for (char c : text) {
    if (c == 'H' || c == 'h') {
      out.push_back(CoinFace::Heads);
    } else if (c == 'T' || c == 't') {
      out.push_back(CoinFace::Tails);
    } else {
      throw ParseError(std::string("coin face must be H or T, got '") + c + "'");
    }
  }
  return out;
}

struct CoinPrefixChance {
  Probability chance;  // product of per-flip chances
  Probability bound;   // r^n, r = largest per-flip chance used
  Probability max_flip_chance;
};

// biases[i] is the chance of heads on flip i.
inline CoinPrefixChance coin_prefix_chance(const std::vector<Rational>& biases,
                                           const std::vector<CoinFace>& prefix) {
  if (prefix.empty()) throw EmptyPrefix("coin prefix is empty");
  if (prefix.size() > biases.size()) {
    throw PrefixTooLong("prefix of " + std::to_string(prefix.size()) + " flips but only " +
                        std::to_string(biases.size()) + " biases");
  }
  Rational product(1);
  Rational r(0);
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (biases[i] <= 0 || biases[i] >= 1) {
      throw OutOfRange("coin bias " + to_string(biases[i]) + " outside (0,1)");
    }
    const Rational p = prefix[i] == CoinFace::Heads ? biases[i] : Rational(1 - biases[i]);
    product *= p;
    r = std::max(r, p);
  }
  CoinPrefixChance out{Probability(product), Probability(pow(r, prefix.size())), Probability(r)};
  // Each factor is at most r.
  if (out.chance > out.bound) throw OutOfRange("prefix chance exceeds r^n");
  return out;
}

struct LotterySpin {
  std::uint64_t spin = 0;
  bool hit = false;
};

struct LotteryReport {
  Probability hit_chance;
  std::uint64_t max_spins = 0;
  std::uint64_t seed = 0;
  std::vector<LotterySpin> spins;
  std::optional<std::uint64_t> terminated_at;
  Probability termination_chance;     // 1 - (1 - q)^max_spins
  Probability nontermination_chance;  // limit as spins grow: 1 if q = 0, else 0
};

// Spin until the outcome lands in the target set, which each spin hits
// independently with chance q. A spin hits when u / 2^64 < q for the next
// 64-bit draw u of mt19937_64(seed).
inline LotteryReport rejection_lottery(const Probability& q, std::uint64_t max_spins,
                                       std::uint64_t seed) {
  if (max_spins == 0) throw OutOfRange("max_spins must be >= 1");
  LotteryReport r;
  r.hit_chance = q;
  r.max_spins = max_spins;
  r.seed = seed;
  r.termination_chance = Probability(Rational(1 - pow(Rational(1 - q.value()), max_spins)));
  r.nontermination_chance = q.value() == 0 ? Probability::one() : Probability::zero();

  Integer scaled_num = q.value().get_num();
  mpz_mul_2exp(scaled_num.get_mpz_t(), scaled_num.get_mpz_t(), 64);
  const Integer& den = q.value().get_den();

  std::mt19937_64 engine(seed);
  for (std::uint64_t s = 1; s <= max_spins; ++s) {
    const std::uint64_t u = engine();
    const bool hit = to_integer(u) * den < scaled_num;
    r.spins.push_back({s, hit});
    if (hit) {
      r.terminated_at = s;
      break;
    }
  }
  return r;
}

// N_a = {n mod 2pi : n >= a}. Distinct integers are distinct angles because
// 2pi is irrational, so N_a strictly contains N_{a+1}.
struct IntegerAngleSet {
  std::uint64_t offset = 1;

  friend bool operator==(const IntegerAngleSet&, const IntegerAngleSet&) = default;
};

struct RotationReport {
  IntegerAngleSet image;
  bool subset = true;   // image ⊆ original, always
  bool strict = false;  // k >= 1
  // Angles a, a+1, ..., a+k-1 (radians mod 2pi) are in the original but not the image.
  std::uint64_t missing_first = 0;
  std::uint64_t missing_count = 0;

  std::vector<std::uint64_t> witnesses(std::size_t limit = 16) const {
    std::vector<std::uint64_t> w;
    for (std::uint64_t i = 0; i < missing_count && w.size() < limit; ++i) w.push_back(missing_first + i);
    return w;
  }
};

// Rotating counterclockwise by k radians sends n to n + k, so N_a -> N_{a+k}.
inline RotationReport rotate_integer_set(const IntegerAngleSet& set, std::uint64_t k) {
  if (set.offset == 0) throw OutOfRange("integer angle sets start at a positive integer");
  RotationReport r;
  r.image = IntegerAngleSet{set.offset + k};
  r.subset = true;
  r.strict = k >= 1;
  r.missing_first = set.offset;
  r.missing_count = k;
  return r;
}

}  // namespace chance_lab
