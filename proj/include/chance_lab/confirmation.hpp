#pragma once

// Bayesian confirmation over chance hypotheses on a countable partition.
// Likelihoods come from the hypotheses' chances (Principal Principle), updates
// are exact conditionalization, and the H / H* pair gets the decay bounds.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chance_lab/errors.hpp"
#include "chance_lab/measures.hpp"
#include "chance_lab/rational.hpp"

namespace chance_lab {

struct ChanceHypothesis {
  std::string name;
  PartitionMeasure measure;
};

inline ChanceHypothesis make_hypothesis(PartitionMeasure m, std::string name = {}) {
  if (name.empty()) name = m.label();
  return {std::move(name), std::move(m)};
}

// Cr(E_k | h) = Ch_h(E_k)
inline Probability principal_likelihood(const ChanceHypothesis& h, std::uint64_t k) {
  return h.measure.mass(k);
}

class CredenceState {
 public:
  // Priors must be positive and sum to exactly 1; at least two hypotheses.
  static CredenceState make(std::vector<ChanceHypothesis> hypotheses,
                            std::vector<Rational> priors) {
    if (hypotheses.size() < 2) {
      throw InvalidCredenceState("a credence state needs at least two hypotheses");
    }
    if (priors.size() != hypotheses.size()) {
      throw InvalidCredenceState("got " + std::to_string(priors.size()) + " priors for " +
                                 std::to_string(hypotheses.size()) + " hypotheses");
    }
    Rational sum(0);
    CredenceState s;
    for (std::size_t i = 0; i < priors.size(); ++i) {
      priors[i].canonicalize();
      if (priors[i] <= 0) {
        throw InvalidCredenceState("prior of '" + hypotheses[i].name +
                                   "' must be > 0 (open-mindedness), got " +
                                   to_string(priors[i]));
      }
      sum += priors[i];
      s.credences_.emplace_back(priors[i]);
    }
    if (sum != 1) {
      throw InvalidCredenceState("priors sum to " + to_string(sum) + ", not 1");
    }
    s.hypotheses_ = std::move(hypotheses);
    s.eliminated_.assign(s.hypotheses_.size(), false);
    return s;
  }

  const std::vector<ChanceHypothesis>& hypotheses() const { return hypotheses_; }
  const std::vector<Probability>& credences() const { return credences_; }
  const std::vector<std::uint64_t>& history() const { return history_; }
  bool eliminated(std::size_t i) const { return eliminated_.at(i); }
  std::size_t size() const { return hypotheses_.size(); }

 private:
  friend CredenceState bayes_update(const CredenceState&, std::uint64_t);

  std::vector<ChanceHypothesis> hypotheses_;
  std::vector<Probability> credences_;
  std::vector<std::uint64_t> history_;
  std::vector<bool> eliminated_;
};

// posterior_i = prior_i * Ch_i(E_k) / sum_j prior_j * Ch_j(E_k)
inline CredenceState bayes_update(const CredenceState& s, std::uint64_t k) {
  std::vector<Rational> joint;
  joint.reserve(s.size());
  Rational evidence(0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    joint.push_back(s.credences_[i].value() *
                    principal_likelihood(s.hypotheses_[i], k).value());
    evidence += joint.back();
  }
  if (evidence == 0) {
    throw ZeroEvidence("every hypothesis gives cell " + std::to_string(k) +
                       " chance 0; conditionalization is undefined");
  }
  CredenceState out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.credences_[i] = Probability(Rational(joint[i] / evidence));
    if (joint[i] == 0) out.eliminated_[i] = true;
  }
  out.history_.push_back(k);
  return out;
}

// Whether the state is exactly {H, H*} with H deficient and H* = hstar(H),
// compared cell by cell rather than by label.
inline bool is_hstar_pair(const CredenceState& s) {
  if (s.size() != 2) return false;
  const PartitionMeasure& h = s.hypotheses()[0].measure;
  if (h.countably_additive()) return false;
  return equal_cellwise(s.hypotheses()[1].measure, hstar(h));
}

namespace detail {

inline Probability lambda_from(const Probability& p_star, const Probability& eps) {
  return Probability(Rational(1 / (1 + p_star.value() * eps.value())));
}

}  // namespace detail

// lambda = 1 / (1 + p* * eps), the per-draw contraction of credence in H.
inline Probability lemma_lambda(const CredenceState& s) {
  if (!is_hstar_pair(s)) {
    throw NotAnHStarPair(
        "lemma bound needs exactly {H, H*} with H deficient and H* = hstar(H)");
  }
  return detail::lambda_from(s.credences()[1], s.hypotheses()[0].measure.deficiency());
}

// For cells in the closed-form region the bound posterior(H | E_k) < lambda * p
// reduces to p* * eps^2 / 2^k > 0, provided H*(k) - (1 + eps) * H(k) is exactly
// eps^2 / 2^k there. This certificate checks that identity on the tail mixture.
struct LemmaTailCertificate {
  std::uint64_t from_cell = 1;
  bool identity_holds = false;
  bool strict = false;  // posterior < lambda * p for every cell >= from_cell
};

inline LemmaTailCertificate lemma_tail_certificate(const CredenceState& s) {
  if (!is_hstar_pair(s)) throw NotAnHStarPair("state is not an {H, H*} pair");
  const PartitionMeasure& h = s.hypotheses()[0].measure;
  const PartitionMeasure& hs = s.hypotheses()[1].measure;
  const Rational eps = h.deficiency().value();

  GeometricSum residual = hs.tail_sum();
  for (const auto& t : h.tails()) residual.add(t.ratio, Rational(-(1 + eps) * t.coefficient));
  residual.add(Rational(1, 2), Rational(-eps * eps));

  LemmaTailCertificate c;
  c.from_cell = std::max(h.closed_form_from(), hs.closed_form_from());
  c.identity_holds = residual.identically_zero();
  c.strict = c.identity_holds && s.credences()[0].value() > 0 &&
             s.credences()[1].value() > 0 && eps > 0;
  return c;
}

inline Probability decay_envelope(const Probability& p0, const Probability& lambda0,
                                  std::uint64_t n) {
  if (lambda0.value() >= 1) {
    throw LambdaNotLessThanOne("decay envelope needs lambda0 < 1, got " + to_string(lambda0));
  }
  return Probability(Rational(pow(lambda0.value(), n) * p0.value()));
}

// The only credence p with p <= lambda * p for lambda < 1.
inline Probability anticipation_limit(const Probability& lambda) {
  if (lambda.value() >= 1) {
    throw LambdaNotLessThanOne("anticipation needs lambda < 1, got " + to_string(lambda));
  }
  return Probability::zero();
}

// Inverse-CDF sampler over a countably additive measure. A uniform 64-bit u
// selects the least k with cumulative mass > u / 2^64. Cumulative masses are
// cached as they are first needed.
class CellSampler {
 public:
  explicit CellSampler(PartitionMeasure m) : measure_(std::move(m)) {
    if (!measure_.countably_additive()) {
      throw DeficientTrueModel("cannot sample from '" + measure_.label() +
                               "': deficiency " + to_string(measure_.deficiency()));
    }
    two64_ = Integer(1);
    mpz_mul_2exp(two64_.get_mpz_t(), two64_.get_mpz_t(), 64);
  }

  std::uint64_t cell_for(std::uint64_t u) {
    const Rational threshold(to_integer(u), two64_);
    // cumulative_[i] = mass of cells 1..i+1
    std::size_t lo = 0;
    while (cumulative_.empty() || cumulative_.back() <= threshold) {
      Rational next = cumulative_.empty() ? Rational(0) : cumulative_.back();
      next += measure_.mass(cumulative_.size() + 1).value();
      cumulative_.push_back(std::move(next));
    }
    std::size_t hi = cumulative_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (cumulative_[mid] > threshold) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo + 1;
  }

  template <class Engine>
  std::uint64_t operator()(Engine& engine) {
    return cell_for(static_cast<std::uint64_t>(engine()));
  }

  const PartitionMeasure& measure() const { return measure_; }

 private:
  PartitionMeasure measure_;
  Integer two64_;
  std::vector<Rational> cumulative_;
};

struct TrajectoryStep {
  std::uint64_t step = 0;
  std::optional<std::uint64_t> cell;  // empty for the initial state
  std::vector<Probability> posteriors;
  // Likelihood ratio of hypothesis i over hypothesis 0 at this draw, and the
  // running product. Empty optional when hypothesis 0 gave the cell chance 0.
  std::vector<std::optional<Rational>> bayes_factors;
  std::vector<std::optional<Rational>> cumulative_factors;
  std::optional<Probability> lambda;    // lambda_step, H / H* pairs only
  std::optional<Probability> envelope;  // lambda_0^step * p_0, H / H* pairs only
};

struct Trajectory {
  std::vector<std::string> hypothesis_names;
  std::uint64_t seed = 0;
  std::vector<TrajectoryStep> steps;
};

// Applies a known outcome sequence; run_trajectory samples one.
inline Trajectory run_sequence(const CredenceState& initial, std::span<const std::uint64_t> cells,
                               std::uint64_t seed = 0) {
  Trajectory traj;
  traj.seed = seed;
  for (const auto& h : initial.hypotheses()) traj.hypothesis_names.push_back(h.name);

  const bool pair = is_hstar_pair(initial);
  std::optional<Probability> eps, lambda0, p0;
  if (pair) {
    eps = initial.hypotheses()[0].measure.deficiency();
    lambda0 = detail::lambda_from(initial.credences()[1], *eps);
    p0 = initial.credences()[0];
  }

  const std::size_t h = initial.size();
  TrajectoryStep first;
  first.posteriors = initial.credences();
  first.bayes_factors.assign(h, std::nullopt);
  first.cumulative_factors.assign(h, Rational(1));
  if (pair) {
    first.lambda = lambda0;
    first.envelope = p0;
  }
  traj.steps.push_back(std::move(first));

  CredenceState state = initial;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::uint64_t k = cells[i];
    state = bayes_update(state, k);

    TrajectoryStep rec;
    rec.step = i + 1;
    rec.cell = k;
    rec.posteriors = state.credences();
    const Rational ref = principal_likelihood(state.hypotheses()[0], k).value();
    const auto& prev = traj.steps.back().cumulative_factors;
    for (std::size_t j = 0; j < h; ++j) {
      std::optional<Rational> bf;
      if (ref != 0) bf = Rational(principal_likelihood(state.hypotheses()[j], k).value() / ref);
      std::optional<Rational> cum;
      if (bf && prev[j]) cum = Rational(*prev[j] * *bf);
      rec.bayes_factors.push_back(std::move(bf));
      rec.cumulative_factors.push_back(std::move(cum));
    }
    if (pair) {
      rec.lambda = detail::lambda_from(state.credences()[1], *eps);
      rec.envelope = decay_envelope(*p0, *lambda0, rec.step);
    }
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

// Draws n_draws cells i.i.d. from true_model with mt19937_64(seed) and
// conditionalizes on each. Deterministic given the seed.
inline Trajectory run_trajectory(const CredenceState& initial, const PartitionMeasure& true_model,
                                 std::uint64_t n_draws, std::uint64_t seed) {
  CellSampler sampler(true_model);
  std::mt19937_64 engine(seed);
  std::vector<std::uint64_t> cells;
  cells.reserve(n_draws);
  for (std::uint64_t i = 0; i < n_draws; ++i) cells.push_back(sampler(engine));
  return run_sequence(initial, cells, seed);
}

}  // namespace chance_lab
