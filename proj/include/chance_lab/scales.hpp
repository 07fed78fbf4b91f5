#pragma once

// Eventual dominance on functions N+ -> N+, the transfinite scale recursion
// cut down to ordinals below omega^2, and the quantile construction of a
// function that a random member of a weighted board falls below with
// chance > 1/2.
//
// The finite board stands in for a continuum-sized set with an atomless
// measure. Only countable additivity and marginal quantiles are used by the
// construction; atomlessness of the board is not modeled.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "chance_lab/errors.hpp"
#include "chance_lab/polynomial.hpp"
#include "chance_lab/rational.hpp"

namespace chance_lab {

// Explicit values on 1..L, then tail(n) for n > L. The tail may have rational
// coefficients as long as it is integer-valued and >= 1 beyond the prefix,
// e.g. (n+1)(n+2)/2.
class SequenceFunction {
 public:
  SequenceFunction() : tail_(Polynomial::constant(Rational(1))) {}

  static SequenceFunction make(std::vector<Integer> prefix, Polynomial tail) {
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (prefix[i] < 1) {
        throw InvalidSequenceFunction("value at n=" + std::to_string(i + 1) + " is " +
                                      prefix[i].get_str() + "; values must be >= 1");
      }
    }
    if (tail.is_zero() || tail.leading() < 0) {
      throw InvalidSequenceFunction("tail " + tail.to_string() +
                                    " is not eventually positive");
    }
    const std::uint64_t first = prefix.size() + 1;
    // Integer-valued everywhere iff integral on degree+1 consecutive integers.
    for (std::uint64_t n = first; n <= first + static_cast<std::uint64_t>(tail.degree()); ++n) {
      if (!is_integral(tail(Rational(to_integer(n))))) {
        throw InvalidSequenceFunction("tail " + tail.to_string() +
                                      " is not integer-valued at n=" + std::to_string(n));
      }
    }
    const std::uint64_t stable = std::max(first, tail.sign_stable_from());
    for (std::uint64_t n = first; n < stable; ++n) {
      if (tail(Rational(to_integer(n))) < 1) {
        throw InvalidSequenceFunction("tail " + tail.to_string() + " is < 1 at n=" +
                                      std::to_string(n));
      }
    }
    SequenceFunction f;
    f.prefix_ = std::move(prefix);
    f.tail_ = std::move(tail);
    return f;
  }

  static SequenceFunction polynomial(const std::vector<long>& coefficients) {
    std::vector<Rational> c;
    for (long x : coefficients) c.emplace_back(x);
    return make({}, Polynomial(std::move(c)));
  }
  static SequenceFunction constant(long v) { return polynomial({v}); }
  static SequenceFunction identity() { return polynomial({0, 1}); }

  Integer operator()(std::uint64_t n) const {
    if (n == 0) throw OutOfRange("sequence functions are defined on n >= 1");
    if (n <= prefix_.size()) return prefix_[n - 1];
    return tail_(Rational(to_integer(n))).get_num();
  }

  const std::vector<Integer>& prefix() const { return prefix_; }
  const Polynomial& tail() const { return tail_; }

  friend bool operator==(const SequenceFunction& a, const SequenceFunction& b) {
    return a.prefix_ == b.prefix_ && a.tail_ == b.tail_;
  }

 private:
  std::vector<Integer> prefix_;
  Polynomial tail_;
};

// Values on 1..horizon only.
struct TabulatedFunction {
  std::vector<Integer> values;

  std::uint64_t horizon() const { return values.size(); }
  const Integer& operator()(std::uint64_t n) const {
    if (n == 0 || n > values.size()) {
      throw HorizonMismatch("n=" + std::to_string(n) + " outside tabulated range 1.." +
                            std::to_string(values.size()));
    }
    return values[n - 1];
  }
};

inline TabulatedFunction tabulate(const SequenceFunction& f, std::uint64_t horizon) {
  TabulatedFunction t;
  t.values.reserve(horizon);
  for (std::uint64_t n = 1; n <= horizon; ++n) t.values.push_back(f(n));
  return t;
}

inline Integer seq_eval(const SequenceFunction& f, std::uint64_t n) { return f(n); }

inline SequenceFunction seq_add(const SequenceFunction& f, const SequenceFunction& g) {
  const std::size_t len = std::max(f.prefix().size(), g.prefix().size());
  std::vector<Integer> prefix;
  prefix.reserve(len);
  for (std::uint64_t n = 1; n <= len; ++n) prefix.push_back(f(n) + g(n));
  return SequenceFunction::make(std::move(prefix), f.tail() + g.tail());
}

struct DominanceVerdict {
  bool holds = false;
  std::uint64_t threshold = 0;  // least N with f(n) < g(n) for every n >= N
};

// f < g: f(n) < g(n) for all but finitely many n. Beyond both prefixes the
// difference is a polynomial; its sign is fixed past the root bound, and the
// cells before that are checked one by one.
inline DominanceVerdict dominates(const SequenceFunction& f, const SequenceFunction& g) {
  const Polynomial d = g.tail() - f.tail();
  if (d.is_zero() || d.leading() < 0) return {};
  const std::uint64_t settled =
      std::max<std::uint64_t>({f.prefix().size() + 1, g.prefix().size() + 1, d.sign_stable_from()});
  std::uint64_t threshold = 1;
  for (std::uint64_t n = settled; n-- > 1;) {
    if (!(f(n) < g(n))) {
      threshold = n + 1;
      break;
    }
  }
  return {true, threshold};
}

// omega * a + b
struct OrdinalIndex {
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  static OrdinalIndex finite(std::uint64_t n) { return {0, n}; }
  static OrdinalIndex omega() { return {1, 0}; }

  bool is_limit() const { return b == 0 && a >= 1; }
  OrdinalIndex successor() const { return {a, b + 1}; }

  friend auto operator<=>(const OrdinalIndex&, const OrdinalIndex&) = default;

  std::string to_string() const {
    if (a == 0) return std::to_string(b);
    std::string s = a == 1 ? "w" : "w*" + std::to_string(a);
    if (b > 0) s += "+" + std::to_string(b);
    return s;
  }
};

// The enumerated functions f_alpha feeding the recursion.
class ScaleFamily {
 public:
  using Generator = std::function<SequenceFunction(OrdinalIndex)>;

  // f_0 .. f_{m-1} only; no limit stage can be built from it.
  static ScaleFamily finite(std::vector<SequenceFunction> members) {
    ScaleFamily fam;
    fam.finite_ = std::move(members);
    return fam;
  }

  static ScaleFamily generated(Generator gen) {
    ScaleFamily fam;
    fam.generator_ = std::move(gen);
    return fam;
  }

  // f_j(n) = sum_e j^e * by_index_power[e](n) for every n >= 1. The stage
  // omega + j reuses the rule at j.
  static ScaleFamily polynomial(std::vector<Polynomial> by_index_power) {
    ScaleFamily fam;
    fam.closed_form_ = by_index_power;
    fam.generator_ = [c = std::move(by_index_power)](OrdinalIndex alpha) {
      const Rational j(to_integer(alpha.b));
      Polynomial p;
      Rational jp(1);
      for (const auto& term : c) {
        p = p + term * jp;
        jp *= j;
      }
      return SequenceFunction::make({}, p);
    };
    return fam;
  }

  // f_j = constant 1
  static ScaleFamily constant_one() { return polynomial({Polynomial::constant(Rational(1))}); }

  // f_j(n) = j*n + 1
  static ScaleFamily linear_index() {
    return polynomial({Polynomial::constant(Rational(1)), Polynomial::monomial(1)});
  }

  SequenceFunction at(OrdinalIndex alpha) const {
    if (generator_) return generator_(alpha);
    if (alpha.a == 0 && alpha.b < finite_.size()) return finite_[alpha.b];
    throw FamilyNotClosedForm("family supplies no f_" + alpha.to_string());
  }

  bool has(OrdinalIndex alpha) const {
    return static_cast<bool>(generator_) || (alpha.a == 0 && alpha.b < finite_.size());
  }

  bool infinite() const { return static_cast<bool>(generator_); }
  const std::optional<std::vector<Polynomial>>& closed_form() const { return closed_form_; }

 private:
  std::vector<SequenceFunction> finite_;
  Generator generator_;
  std::optional<std::vector<Polynomial>> closed_form_;
};

// A built stage g_alpha: symbolic when every ingredient is, otherwise
// tabulated up to the caller's horizon.
class ScaleFunction {
 public:
  ScaleFunction() = default;
  explicit ScaleFunction(SequenceFunction f) : repr_(std::move(f)) {}
  explicit ScaleFunction(TabulatedFunction t) : repr_(std::move(t)) {}

  bool symbolic() const { return std::holds_alternative<SequenceFunction>(repr_); }
  const SequenceFunction& sequence() const { return std::get<SequenceFunction>(repr_); }
  const TabulatedFunction& table() const { return std::get<TabulatedFunction>(repr_); }

  Integer operator()(std::uint64_t n) const {
    return symbolic() ? sequence()(n) : table()(n);
  }

  std::optional<std::uint64_t> horizon() const {
    if (symbolic()) return std::nullopt;
    return table().horizon();
  }

 private:
  std::variant<SequenceFunction, TabulatedFunction> repr_;
};

struct ScaleStage {
  OrdinalIndex index;
  ScaleFunction g;
};

namespace detail {

inline ScaleFunction add_member(const ScaleFunction& g, const SequenceFunction& f) {
  if (g.symbolic()) return ScaleFunction(seq_add(g.sequence(), f));
  TabulatedFunction t = g.table();
  for (std::uint64_t n = 1; n <= t.horizon(); ++n) t.values[n - 1] += f(n);
  return ScaleFunction(std::move(t));
}

// g_omega(n) = sum_{k=0}^{n} g_k(n) with g_k = 1 + sum_{j<k} f_j. For
// f_j(n) = sum_e j^e A_e(n) this is (n+1) + sum_e A_e(n) * T_e(n) where
// T_e(n) = sum_{k=0}^{n} sum_{j=0}^{k-1} j^e.
inline SequenceFunction omega_closed_form(const std::vector<Polynomial>& by_index_power) {
  Polynomial g = Polynomial({Rational(1), Rational(1)});
  for (std::size_t e = 0; e < by_index_power.size(); ++e) {
    const Polynomial power_sum = Polynomial::monomial(e).prefix_sum();
    const Polynomial nested = power_sum.prefix_sum().shifted(Rational(1));
    g = g + by_index_power[e] * nested;
  }
  return SequenceFunction::make({}, g);
}

inline TabulatedFunction omega_tabulated(const ScaleFamily& family, std::uint64_t horizon) {
  std::vector<SequenceFunction> members;
  members.reserve(horizon + 1);
  for (std::uint64_t k = 0; k <= horizon; ++k) members.push_back(family.at(OrdinalIndex::finite(k)));
  TabulatedFunction t;
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    Integer stage(1), total(0);
    for (std::uint64_t k = 0; k <= n; ++k) {
      total += stage;
      stage += members[k](n);
    }
    t.values.push_back(total);
  }
  return t;
}

}  // namespace detail

// g_0 = 1, g_{alpha+1} = f_alpha + g_alpha, and at omega the limit clause
// over the enumeration 0, 1, 2, ... of the finite ordinals.
inline ScaleStage build_scale(const ScaleFamily& family, OrdinalIndex target,
                              std::optional<std::uint64_t> horizon = std::nullopt) {
  if (target.a >= 2) {
    throw TargetOutOfRange("stage " + target.to_string() + " is beyond omega*2");
  }
  ScaleFunction g(SequenceFunction::constant(1));
  std::uint64_t finite_steps = target.b;
  if (target.a == 1) {
    if (!family.infinite()) {
      throw FamilyNotClosedForm("the limit stage needs f_j for every finite j");
    }
    if (family.closed_form()) {
      g = ScaleFunction(detail::omega_closed_form(*family.closed_form()));
    } else if (horizon) {
      g = ScaleFunction(detail::omega_tabulated(family, *horizon));
    } else {
      throw FamilyNotClosedForm(
          "family has no polynomial closed form; pass a horizon to tabulate the limit stage");
    }
  }
  for (std::uint64_t j = 0; j < finite_steps; ++j) {
    g = detail::add_member(g, family.at({target.a, j}));
  }
  return {target, std::move(g)};
}

inline std::vector<ScaleStage> build_scale_stages(const ScaleFamily& family,
                                                  std::vector<OrdinalIndex> targets,
                                                  std::optional<std::uint64_t> horizon = std::nullopt) {
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::vector<ScaleStage> out;
  for (const auto& t : targets) out.push_back(build_scale(family, t, horizon));
  return out;
}

struct ScaleCheck {
  enum class Kind { Increasing, FamilyBelow };
  Kind kind = Kind::Increasing;
  OrdinalIndex lower;  // alpha: g_alpha or f_alpha
  OrdinalIndex upper;  // beta: g_beta
  bool holds = false;
  std::uint64_t threshold = 0;
  bool symbolic = false;  // false: verified on (threshold - 1, horizon] only
};

struct ScaleReport {
  std::vector<ScaleCheck> checks;
  bool all_hold = true;
};

namespace detail {

// For tabulated g_beta, the limit clause gives g_{beta_m}(n) < g_lambda(n)
// for n > m. Returns the first n from which the comparison is claimed.
inline std::uint64_t limit_threshold(OrdinalIndex lower) {
  return lower.a == 0 ? lower.b + 1 : 1;
}

inline bool holds_on_range(const std::function<Integer(std::uint64_t)>& lo,
                           const ScaleFunction& hi, std::uint64_t from) {
  const std::uint64_t h = *hi.horizon();
  for (std::uint64_t n = from; n <= h; ++n) {
    if (!(lo(n) < hi(n))) return false;
  }
  return true;
}

}  // namespace detail

// Checks g_alpha < g_beta and f_alpha < g_beta for every built alpha < beta.
inline ScaleReport verify_scale(const ScaleFamily& family, const std::vector<ScaleStage>& built) {
  ScaleReport report;
  for (std::size_t i = 0; i < built.size(); ++i) {
    for (std::size_t j = 0; j < built.size(); ++j) {
      const auto& lo = built[i];
      const auto& hi = built[j];
      if (!(lo.index < hi.index)) continue;

      ScaleCheck inc{ScaleCheck::Kind::Increasing, lo.index, hi.index};
      if (lo.g.symbolic() && hi.g.symbolic()) {
        const auto v = dominates(lo.g.sequence(), hi.g.sequence());
        inc.holds = v.holds;
        inc.threshold = v.threshold;
        inc.symbolic = true;
      } else {
        // Two tabulated stages past omega differ by a sum of positive f's.
        inc.threshold = lo.g.symbolic() ? detail::limit_threshold(lo.index) : 1;
        inc.holds = detail::holds_on_range([&](std::uint64_t n) { return lo.g(n); }, hi.g,
                                           inc.threshold);
      }
      report.all_hold = report.all_hold && inc.holds;
      report.checks.push_back(inc);

      if (!family.has(lo.index)) continue;
      const SequenceFunction f = family.at(lo.index);
      ScaleCheck fam{ScaleCheck::Kind::FamilyBelow, lo.index, hi.index};
      if (hi.g.symbolic()) {
        const auto v = dominates(f, hi.g.sequence());
        fam.holds = v.holds;
        fam.threshold = v.threshold;
        fam.symbolic = true;
      } else {
        // f_alpha < g_{alpha+1} pointwise, and g_{alpha+1} sits at position
        // alpha+1 of the enumeration below the limit.
        fam.threshold = detail::limit_threshold(lo.index.successor());
        if (lo.index.a > 0) fam.threshold = 1;
        fam.holds = detail::holds_on_range([&](std::uint64_t n) { return f(n); }, hi.g,
                                           fam.threshold);
      }
      report.all_hold = report.all_hold && fam.holds;
      report.checks.push_back(fam);
    }
  }
  return report;
}

// Finitely many functions with positive weights summing to exactly 1.
class Dartboard {
 public:
  static Dartboard make(std::vector<SequenceFunction> members, std::vector<Rational> weights) {
    if (members.empty()) throw InvalidDartboard("a dartboard needs at least one member");
    if (members.size() != weights.size()) {
      throw InvalidDartboard(std::to_string(weights.size()) + " weights for " +
                             std::to_string(members.size()) + " members");
    }
    Rational sum(0);
    for (auto& w : weights) {
      w.canonicalize();
      if (w <= 0) throw InvalidDartboard("weight " + to_string(w) + " is not positive");
      sum += w;
    }
    if (sum != 1) throw InvalidDartboard("weights sum to " + to_string(sum) + ", not 1");
    Dartboard b;
    b.members_ = std::move(members);
    b.weights_ = std::move(weights);
    return b;
  }

  const std::vector<SequenceFunction>& members() const { return members_; }
  const std::vector<Rational>& weights() const { return weights_; }
  std::size_t size() const { return members_.size(); }

  // Ch(g(n) = v) for each value v taken at n.
  std::map<Integer, Rational> marginal(std::uint64_t n) const {
    std::map<Integer, Rational> out;
    for (std::size_t i = 0; i < members_.size(); ++i) out[members_[i](n)] += weights_[i];
    return out;
  }

 private:
  std::vector<SequenceFunction> members_;
  std::vector<Rational> weights_;
};

// Ch(g(n) >= bound)
inline Probability exceedance(const Dartboard& board, std::uint64_t n, const Integer& bound) {
  Rational out(0);
  for (std::size_t i = 0; i < board.size(); ++i) {
    if (board.members()[i](n) >= bound) out += board.weights()[i];
  }
  return Probability(std::move(out));
}

// f(n) = K + 1 for the least K with Ch(g(n) <= K) > 1 - 2^{-(n+1)}, so that
// Ch(g(n) >= f(n)) < 2^{-(n+1)}.
inline TabulatedFunction dominating_function(const Dartboard& board, std::uint64_t horizon) {
  if (horizon == 0) throw OutOfRange("horizon must be >= 1");
  TabulatedFunction f;
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    const Rational target = 1 - half_pow(n + 1);
    Rational cumulative(0);
    std::optional<Integer> k;
    for (const auto& [value, weight] : board.marginal(n)) {
      cumulative += weight;
      if (cumulative > target) {
        k = value;
        break;
      }
    }
    // The full marginal reaches 1 > target, so k is always found.
    f.values.push_back(*k + 1);
  }
  return f;
}

// The union-bound chain
//   coverage >= 1 - sum_n Ch(g(n) >= f(n)) > 1 - sum_n 2^{-(n+1)} >= 1/2
// with every term computed exactly over n = 1..horizon. The infinite sum's
// residual 2^{-(horizon+1)} is kept in quantile_budget.
struct CoverageCertificate {
  std::uint64_t horizon = 0;
  std::vector<Probability> exceedances;  // Ch(g(n) >= f(n))
  std::vector<Probability> budgets;      // 2^{-(n+1)}
  bool quantile_guarantee = false;       // every exceedance < its budget
  Rational union_lower_bound;            // 1 - sum exceedances (may be negative)
  Rational quantile_budget;              // 1 - sum budgets = 1/2 + 2^{-(horizon+1)}
  bool coverage_ge_union = false;
  bool union_gt_budget = false;
  bool budget_ge_half = false;
  bool certified = false;  // all three links
};

struct CoverageResult {
  Probability coverage;
  CoverageCertificate certificate;
};

inline CoverageResult coverage(const Dartboard& board, const TabulatedFunction& f,
                               std::uint64_t horizon) {
  if (horizon == 0 || f.horizon() < horizon) {
    throw HorizonMismatch("function tabulated on 1.." + std::to_string(f.horizon()) +
                          " but coverage requested on 1.." + std::to_string(horizon));
  }
  Rational below(0);
  for (std::size_t i = 0; i < board.size(); ++i) {
    bool all = true;
    for (std::uint64_t n = 1; n <= horizon && all; ++n) all = board.members()[i](n) < f(n);
    if (all) below += board.weights()[i];
  }

  CoverageCertificate c;
  c.horizon = horizon;
  c.quantile_guarantee = true;
  Rational exceed_sum(0), budget_sum(0);
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    c.exceedances.push_back(exceedance(board, n, f(n)));
    c.budgets.emplace_back(half_pow(n + 1));
    exceed_sum += c.exceedances.back().value();
    budget_sum += c.budgets.back().value();
    c.quantile_guarantee = c.quantile_guarantee && c.exceedances.back() < c.budgets.back();
  }
  c.union_lower_bound = 1 - exceed_sum;
  c.quantile_budget = 1 - budget_sum;
  c.coverage_ge_union = below >= c.union_lower_bound;
  c.union_gt_budget = c.union_lower_bound > c.quantile_budget;
  c.budget_ge_half = c.quantile_budget >= Rational(1, 2);
  c.certified = c.coverage_ge_union && c.union_gt_budget && c.budget_ge_half;
  return {Probability(std::move(below)), std::move(c)};
}

inline CoverageResult coverage(const Dartboard& board, const SequenceFunction& f,
                               std::uint64_t horizon) {
  return coverage(board, tabulate(f, horizon), horizon);
}

}  // namespace chance_lab
