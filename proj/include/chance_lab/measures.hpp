#pragma once

// Chance distributions over a countable partition {E_1, E_2, ...} held as
// an explicit finite head plus a finite mixture of geometric tails, so that
// total mass, deficiency and both dominating constructions stay exact.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chance_lab/errors.hpp"
#include "chance_lab/rational.hpp"

namespace chance_lab {

// Mass c * rho^n at every cell n >= start.
struct GeometricTail {
  Rational coefficient;
  Rational ratio;
  std::uint64_t start = 1;

  Rational mass(std::uint64_t n) const {
    if (n < start) return Rational(0);
    return coefficient * pow(ratio, n);
  }

  // c * rho^start / (1 - rho)
  Rational total() const { return coefficient * pow(ratio, start) / (1 - ratio); }

  friend bool operator==(const GeometricTail&, const GeometricTail&) = default;
};

// Finite sum of c_j * r_j^n, keyed by ratio. Used to compare measures on the
// region where every tail is active and no head entry remains.
class GeometricSum {
 public:
  void add(const Rational& ratio, const Rational& coefficient) {
    auto& c = terms_[ratio];
    c += coefficient;
    if (c == 0) terms_.erase(ratio);
  }

  Rational operator()(std::uint64_t n) const {
    Rational out(0);
    for (const auto& [ratio, c] : terms_) out += c * pow(ratio, n);
    return out;
  }

  bool identically_zero() const { return terms_.empty(); }

  const std::map<Rational, Rational>& terms() const { return terms_; }

  // Sign the sum takes for all n >= from_index. The dominant (largest-ratio)
  // term decides the sign; from_index is the first n >= lower_bound at which
  // it outweighs the absolute sum of the remaining terms, which then holds
  // for every larger n because each (r_j / r_max)^n decreases.
  struct EventualSign {
    int sign = 0;
    std::uint64_t from_index = 1;
  };

  EventualSign eventual_sign(std::uint64_t lower_bound) const {
    if (terms_.empty()) return {0, lower_bound};
    const auto& [lead_ratio, lead_coef] = *terms_.rbegin();
    const Rational lead_abs = abs(lead_coef);
    std::vector<std::pair<Rational, Rational>> rest;  // (r_j / r_max, |c_j|)
    for (auto it = std::next(terms_.rbegin()); it != terms_.rend(); ++it) {
      rest.emplace_back(Rational(it->first / lead_ratio), abs(it->second));
    }
    std::uint64_t n = lower_bound;
    // Geometric decay: bounded by log(sum |c_j| / |c_max|) / log(r_max / r_j) steps.
    while (true) {
      Rational others(0);
      for (const auto& [q, c] : rest) others += c * pow(q, n);
      if (lead_abs > others) break;
      ++n;
    }
    return {lead_coef > 0 ? 1 : -1, n};
  }

 private:
  std::map<Rational, Rational> terms_;
};

class PartitionMeasure;
PartitionMeasure make_partition_measure(std::vector<Rational> head,
                                        std::vector<GeometricTail> tails,
                                        std::string label = {});

// A finitely additive probability on the partition algebra, indexed from 1.
// Immutable after construction; only make_partition_measure builds one.
class PartitionMeasure {
 public:
  PartitionMeasure() = default;

  const std::vector<Rational>& head() const { return head_; }
  const std::vector<GeometricTail>& tails() const { return tails_; }
  const std::string& label() const { return label_; }

  Probability mass(std::uint64_t n) const {
    if (n == 0) throw OutOfRange("partition cells are indexed from 1");
    if (n <= head_.size()) return Probability(head_[n - 1]);
    Rational out(0);
    for (const auto& t : tails_) out += t.mass(n);
    return Probability(std::move(out));
  }

  const Probability& total_mass() const { return total_; }

  Probability deficiency() const { return total_.complement(); }

  bool countably_additive() const { return total_.value() == 1; }

  // First cell from which mass(n) is given by the full tail mixture.
  std::uint64_t closed_form_from() const {
    std::uint64_t from = head_.size() + 1;
    for (const auto& t : tails_) from = std::max(from, t.start);
    return from;
  }

  GeometricSum tail_sum() const {
    GeometricSum s;
    for (const auto& t : tails_) s.add(t.ratio, t.coefficient);
    return s;
  }

 private:
  friend PartitionMeasure make_partition_measure(std::vector<Rational>,
                                                 std::vector<GeometricTail>, std::string);

  std::vector<Rational> head_;
  std::vector<GeometricTail> tails_;
  std::string label_;
  Probability total_;
};

inline PartitionMeasure make_partition_measure(std::vector<Rational> head,
                                               std::vector<GeometricTail> tails,
                                               std::string label) {
  for (std::size_t i = 0; i < head.size(); ++i) {
    head[i].canonicalize();
    if (head[i] < 0) {
      throw NegativeMass("head mass at cell " + std::to_string(i + 1) + " is " +
                         to_string(head[i]));
    }
  }
  for (auto& t : tails) {
    t.coefficient.canonicalize();
    t.ratio.canonicalize();
    if (t.coefficient <= 0) {
      throw InvalidTail("tail coefficient must be > 0, got " + to_string(t.coefficient));
    }
    if (t.ratio <= 0 || t.ratio >= 1) {
      throw InvalidTail("tail ratio must lie in (0,1), got " + to_string(t.ratio));
    }
    if (t.start == 0) throw InvalidTail("tail start index must be >= 1");
    if (t.start <= head.size()) {
      throw TailOverlapsHead("tail starting at " + std::to_string(t.start) +
                             " overlaps head of length " + std::to_string(head.size()));
    }
  }

  // Merge tails sharing (start, ratio) and order them canonically.
  std::map<std::pair<std::uint64_t, Rational>, Rational> merged;
  for (const auto& t : tails) merged[{t.start, t.ratio}] += t.coefficient;
  tails.clear();
  for (const auto& [key, c] : merged) tails.push_back({c, key.second, key.first});

  Rational total(0);
  for (const auto& h : head) total += h;
  for (const auto& t : tails) total += t.total();
  if (total > 1) {
    throw MassExceedsOne("total mass exceeds 1 by " + to_string(Rational(total - 1)));
  }

  PartitionMeasure m;
  m.head_ = std::move(head);
  m.tails_ = std::move(tails);
  m.label_ = std::move(label);
  m.total_ = Probability(std::move(total));
  return m;
}

inline Probability mass(const PartitionMeasure& m, std::uint64_t n) { return m.mass(n); }
inline Probability total_mass(const PartitionMeasure& m) { return m.total_mass(); }
inline Probability deficiency(const PartitionMeasure& m) { return m.deficiency(); }

// Shaman's chances: mass(n) = 1/2^{n+1}, total 1/2.
inline PartitionMeasure shaman_measure() {
  return make_partition_measure({}, {{Rational(1, 2), Rational(1, 2), 1}}, "shaman");
}

// The countably additive alternative: mass(n) = 1/2^n.
inline PartitionMeasure geometric_measure() {
  return make_partition_measure({}, {{Rational(1), Rational(1, 2), 1}}, "geometric");
}

namespace detail {

// scale * m(n) + extra / 2^n on every cell; the added tail starts right
// after the head, so empty cells between head and tails become tail cells.
inline PartitionMeasure affine_lift(const PartitionMeasure& m, const Rational& scale,
                                    const Rational& extra, std::string label) {
  std::vector<Rational> head;
  head.reserve(m.head().size());
  for (std::size_t i = 0; i < m.head().size(); ++i) {
    head.push_back(scale * m.head()[i] + extra * half_pow(i + 1));
  }
  std::vector<GeometricTail> tails;
  for (const auto& t : m.tails()) tails.push_back({scale * t.coefficient, t.ratio, t.start});
  tails.push_back({extra, Rational(1, 2), m.head().size() + 1});
  return make_partition_measure(std::move(head), std::move(tails), std::move(label));
}

}  // namespace detail

// Pr*(E_n) = Pr(E_n) + eps / 2^n. Exists exactly when eps > 0.
inline PartitionMeasure dominate(const PartitionMeasure& m) {
  const Rational eps = m.deficiency().value();
  if (eps == 0) {
    throw AlreadyCountablyAdditive("'" + m.label() +
                                   "' has deficiency 0; no measure dominates it cell-wise");
  }
  return detail::affine_lift(m, Rational(1), eps, "dominate(" + m.label() + ")");
}

// Ch*(E_n) = (1 + eps) * Ch(E_n) + eps^2 / 2^n.
inline PartitionMeasure hstar(const PartitionMeasure& m) {
  const Rational eps = m.deficiency().value();
  if (eps == 0) {
    throw AlreadyCountablyAdditive("'" + m.label() + "' has deficiency 0; H* is undefined");
  }
  return detail::affine_lift(m, Rational(1 + eps), Rational(eps * eps),
                             "hstar(" + m.label() + ")");
}

// candidate(n) - base(n) on the closed-form region of both measures.
inline GeometricSum tail_difference(const PartitionMeasure& base,
                                    const PartitionMeasure& candidate) {
  GeometricSum d;
  for (const auto& t : candidate.tails()) d.add(t.ratio, t.coefficient);
  for (const auto& t : base.tails()) d.add(t.ratio, Rational(-t.coefficient));
  return d;
}

// True when a and b assign the same mass to every cell.
inline bool equal_cellwise(const PartitionMeasure& a, const PartitionMeasure& b) {
  const std::uint64_t from = std::max(a.closed_form_from(), b.closed_form_from());
  for (std::uint64_t n = 1; n < from; ++n) {
    if (a.mass(n) != b.mass(n)) return false;
  }
  return tail_difference(a, b).identically_zero();
}

struct CellVerdict {
  std::uint64_t cell = 0;
  Probability base;
  Probability candidate;
  bool strict = false;  // candidate > base
};

struct DominationReport {
  std::uint64_t horizon = 0;
  std::vector<CellVerdict> cells;  // n = 1..horizon
  bool cells_dominated = false;
  // Cells beyond the horizon: checked one by one up to tail_checked_through,
  // then settled by the sign of the tail difference from tail_symbolic_from on.
  bool tail_dominated = false;
  std::uint64_t tail_checked_through = 0;
  std::uint64_t tail_symbolic_from = 0;
  std::optional<std::uint64_t> witness;  // first cell without strict domination
  Probability base_deficiency;
  Probability candidate_deficiency;
  bool base_additive = false;
  bool candidate_additive = false;
  bool dominates_everywhere = false;
};

inline DominationReport domination_report(const PartitionMeasure& base,
                                          const PartitionMeasure& candidate,
                                          std::uint64_t horizon) {
  if (horizon == 0) throw OutOfRange("domination horizon must be >= 1");
  DominationReport r;
  r.horizon = horizon;
  r.base_deficiency = base.deficiency();
  r.candidate_deficiency = candidate.deficiency();
  r.base_additive = base.countably_additive();
  r.candidate_additive = candidate.countably_additive();

  r.cells_dominated = true;
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    CellVerdict v{n, base.mass(n), candidate.mass(n), false};
    v.strict = v.candidate > v.base;
    if (!v.strict) {
      r.cells_dominated = false;
      if (!r.witness) r.witness = n;
    }
    r.cells.push_back(std::move(v));
  }

  const std::uint64_t closed_from =
      std::max({base.closed_form_from(), candidate.closed_form_from(), horizon + 1});
  const auto sign = tail_difference(base, candidate).eventual_sign(closed_from);
  r.tail_symbolic_from = sign.from_index;

  // Explicit cells between the horizon and the symbolic region. A non-positive
  // eventual sign means some cell at or after from_index fails, so the scan
  // runs through from_index in that case to locate a witness.
  const std::uint64_t scan_to = sign.sign > 0 ? sign.from_index - 1 : sign.from_index;
  r.tail_dominated = sign.sign > 0;
  for (std::uint64_t n = horizon + 1; n <= scan_to; ++n) {
    if (!(candidate.mass(n) > base.mass(n))) {
      r.tail_dominated = false;
      if (!r.witness) r.witness = n;
      break;
    }
  }
  r.tail_checked_through = std::max(horizon, scan_to);
  r.dominates_everywhere = r.cells_dominated && r.tail_dominated;
  return r;
}

}  // namespace chance_lab
