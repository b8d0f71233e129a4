#pragma once

// The message-ensemble decision layer: k-sample enumeration and sampling,
// majority vote (discrete) and coordinate-wise median (continuous)
// aggregation, and the D-sample variants.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ame/message.hpp"
#include "ame/policy.hpp"
#include "ame/rng.hpp"

namespace ame {

using Combination = std::vector<std::size_t>;
/// Discrete action id -> number of k-samples voting for it.
using VoteTable = std::map<std::size_t, std::uint64_t>;

enum class Execution { sequential, parallel };

struct EnsembleDecision {
  Action action;
  VoteTable votes;  // empty for continuous policies
  std::uint64_t evaluated = 0;

  /// Largest vote count (u_max); 0 for continuous decisions.
  std::uint64_t top_votes() const;
};

// ---------------------------------------------------------------------------
// Combinations

/// C(n, k) for n <= 64 without big integers.
std::uint64_t small_binomial(std::size_t n, std::size_t k);

/// All k-subsets of {0..n-1} in lexicographic order.
std::vector<Combination> enumerate_combinations(std::size_t n, std::size_t k);

/// Advances `c` to the next k-subset of {0..n-1} in lexicographic order;
/// false once `c` was the last one.
bool next_combination(std::span<std::size_t> c, std::size_t n);

/// The combination with the given lexicographic rank among C(n, k).
Combination unrank_combination(std::uint64_t rank, std::size_t n, std::size_t k);
std::uint64_t rank_combination(std::span<const std::size_t> c, std::size_t n);

/// `count` distinct values from [0, population), uniform over all subsets,
/// in draw order (partial Fisher-Yates on a sparse index map).
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population, std::uint64_t count,
                                                      Rng& rng);

// ---------------------------------------------------------------------------
// k-samples

std::vector<KSample> enumerate_k_samples(const MessageSet& msgs, std::size_t k);
std::vector<KSample> sample_k_samples(const MessageSet& msgs, std::size_t k,
                                      std::uint64_t sample_size, std::uint64_t seed);

/// Index sets behind sample_k_samples, for callers that only need views.
std::vector<Combination> sample_combinations(std::size_t n_channels, std::size_t k,
                                             std::uint64_t sample_size, std::uint64_t seed);

/// Base policy output on each listed index set, in list order.
std::vector<Action> evaluate_base_actions(const AblationPolicy& policy, const History& history,
                                          const MessageSet& msgs,
                                          std::span<const Combination> samples,
                                          Execution exec = Execution::sequential);

// ---------------------------------------------------------------------------
// Aggregation

/// Most-voted action; ties go to the lowest action id.
Action majority_vote(const VoteTable& votes);

/// Element-wise median; even counts use the mean of the two middle values.
std::vector<double> coordinate_median(std::span<const std::vector<double>> values);

/// Aggregates already-evaluated base actions the way the ensemble would.
EnsembleDecision aggregate(const AblationPolicy& policy, std::span<const Action> base_actions);

EnsembleDecision ensemble_act_discrete(const AblationPolicy& policy, const History& history,
                                       const MessageSet& msgs, std::size_t k,
                                       Execution exec = Execution::sequential);
EnsembleDecision ensemble_act_continuous(const AblationPolicy& policy, const History& history,
                                         const MessageSet& msgs, std::size_t k,
                                         Execution exec = Execution::sequential);
/// Full ensemble, dispatching on the policy's action kind.
EnsembleDecision ensemble_act(const AblationPolicy& policy, const History& history,
                              const MessageSet& msgs, std::size_t k,
                              Execution exec = Execution::sequential);
/// D-ensemble over sample_k_samples(msgs, k, D, seed).
EnsembleDecision ensemble_act_partial(const AblationPolicy& policy, const History& history,
                                      const MessageSet& msgs, std::size_t k,
                                      std::uint64_t sample_size, std::uint64_t seed,
                                      Execution exec = Execution::sequential);

/// A base policy wrapped with its ablation size and optional sample size.
/// Holds a reference: the base policy must outlive it.
class EnsemblePolicy {
 public:
  EnsemblePolicy(const AblationPolicy& base, std::size_t k,
                 std::optional<std::uint64_t> sample_size = std::nullopt,
                 Execution exec = Execution::sequential);

  /// `seed` selects the D k-samples; ignored by the full ensemble.
  EnsembleDecision act(const History& history, const MessageSet& msgs, std::uint64_t seed) const;

  const AblationPolicy& base() const noexcept { return *base_; }
  std::size_t ablation_size() const noexcept { return k_; }
  std::optional<std::uint64_t> sample_size() const noexcept { return sample_size_; }
  bool uses_seed(std::size_t n_channels) const;

 private:
  const AblationPolicy* base_;
  std::size_t k_;
  std::optional<std::uint64_t> sample_size_;
  Execution exec_;
};

}  // namespace ame
