#pragma once

// Attack harness: channel selection under a budget of C corrupted messages
// and the attacker strategies that rewrite them.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ame/ensemble.hpp"
#include "ame/environment.hpp"
#include "ame/message.hpp"
#include "ame/rng.hpp"

namespace ame {

enum class ChannelPolicy { fixed_set, per_step_reselect };

struct AttackBudget {
  std::size_t max_corrupted = 0;  // C
  ChannelPolicy channel_policy = ChannelPolicy::per_step_reselect;
  /// Allows C >= (N-1)/2; only meant for stress runs.
  bool stress = false;

  /// Throws InvalidRange when C exceeds the channel count, or breaks
  /// C < (N-1)/2 without stress mode.
  void validate(std::size_t n_channels) const;
};

enum class SeedMode { blind, aware };

/// What an attacker may look at besides the benign messages.
struct AttackContext {
  /// Channels the harness handed over this step (size <= C).
  std::span<const std::size_t> channels;
  /// Model of the environment at the current step (model-based attackers).
  const Environment* env = nullptr;
  const EnsemblePolicy* victim = nullptr;
  /// Seed the victim will use for its D-sample draw this step.
  std::uint64_t victim_seed = 0;
};

class Attacker {
 public:
  virtual ~Attacker() = default;

  virtual std::string name() const = 0;
  /// Adaptive attackers pick their own channels within the budget; the
  /// harness then hands them every allowed channel.
  virtual bool chooses_channels() const { return false; }
  /// Returns the perturbed set. Only rewritten channels may differ from
  /// `benign`, and their tamper_mask bits are set.
  virtual MessageSet attack(const AttackContext& ctx, const MessageSet& benign,
                            const AttackBudget& budget, Rng& rng) const = 0;
};

// ---------------------------------------------------------------------------
// Payload transforms from the inventory experiments

/// Random permutation of the entries.
std::vector<double> perm_attack(std::span<const double> demand, Rng& rng);
/// Rank reversal: the value of rank r moves to the position holding rank
/// M+1-r. Equal values are ranked by original index.
std::vector<double> swap_attack(std::span<const double> demand);
/// Mirror about the mean, 2*eta - d_j, floored at 0.
std::vector<double> flip_attack(std::span<const double> demand);

/// C channels chosen uniformly, each rewritten with a uniform draw from
/// `domain`.
MessageSet random_attack(const MessageSet& msgs, const AttackBudget& budget,
                         const PayloadDomain& domain, Rng& rng);

// ---------------------------------------------------------------------------
// Attackers

class RandomAttacker final : public Attacker {
 public:
  explicit RandomAttacker(PayloadDomain domain) : domain_(std::move(domain)) {}
  std::string name() const override { return "random"; }
  MessageSet attack(const AttackContext& ctx, const MessageSet& benign, const AttackBudget& budget,
                    Rng& rng) const override;

 private:
  PayloadDomain domain_;
};

enum class DemandTransform { perm, swap, flip };

/// Rewrites each controlled channel with perm/swap/flip of its benign payload.
class DemandAttacker final : public Attacker {
 public:
  explicit DemandAttacker(DemandTransform t) : transform_(t) {}
  std::string name() const override;
  MessageSet attack(const AttackContext& ctx, const MessageSet& benign, const AttackBudget& budget,
                    Rng& rng) const override;

 private:
  DemandTransform transform_;
};

/// Pushes every coordinate of the benign payload to the farthest face of the
/// payload box (a decoy as far from the truth as the domain allows).
class ExtremeAttacker final : public Attacker {
 public:
  explicit ExtremeAttacker(PayloadDomain domain) : domain_(std::move(domain)) {}
  std::string name() const override { return "extreme"; }
  MessageSet attack(const AttackContext& ctx, const MessageSet& benign, const AttackBudget& budget,
                    Rng& rng) const override;

 private:
  PayloadDomain domain_;
};

/// Adds a fixed offset to the benign payload.
class OffsetAttacker final : public Attacker {
 public:
  explicit OffsetAttacker(std::vector<double> offset) : offset_(std::move(offset)) {}
  std::string name() const override { return "offset"; }
  MessageSet attack(const AttackContext& ctx, const MessageSet& benign, const AttackBudget& budget,
                    Rng& rng) const override;

 private:
  std::vector<double> offset_;
};

struct GreedySearchOptions {
  std::size_t horizon = 1;
  /// Above this many (subset x assignment) combinations, fall back to
  /// greedy coordinate descent.
  std::uint64_t exhaustive_limit = 100000;
  SeedMode seed_mode = SeedMode::blind;
  /// Restrict the search to these channels (fixed-set budgets); empty = all.
  std::vector<std::size_t> allowed_channels;
};

struct GreedySearchResult {
  MessageSet perturbed;
  double victim_return = 0.0;
  bool exhaustive = false;
  std::uint64_t evaluated = 0;
};

/// Number of (channel subset of size <= C) x (payload assignment) combinations.
std::uint64_t attack_search_space(std::size_t n_channels, std::size_t budget,
                                  std::size_t n_candidates);

/// Searches channel subsets of size <= C and candidate payload assignments for
/// the perturbation that minimizes the victim's undiscounted return over the
/// next `horizon` steps, holding the perturbation fixed during the lookahead.
/// Exhaustive when the search space fits the limit; greedy coordinate descent
/// otherwise. Ties keep the earliest combination in enumeration order.
GreedySearchResult greedy_adaptive_attack(const Environment& env_model,
                                          const EnsemblePolicy& victim, const MessageSet& msgs,
                                          const AttackBudget& budget,
                                          std::span<const Payload> candidates,
                                          const GreedySearchOptions& options, Rng& rng,
                                          std::uint64_t victim_seed = 0);

class GreedyAdaptiveAttacker final : public Attacker {
 public:
  GreedyAdaptiveAttacker(std::vector<Payload> candidates, GreedySearchOptions options)
      : candidates_(std::move(candidates)), options_(std::move(options)) {}
  std::string name() const override { return "greedy"; }
  bool chooses_channels() const override { return true; }
  MessageSet attack(const AttackContext& ctx, const MessageSet& benign, const AttackBudget& budget,
                    Rng& rng) const override;

 private:
  std::vector<Payload> candidates_;
  GreedySearchOptions options_;
};

// ---------------------------------------------------------------------------

/// Owns an attacker plus its budget and does the per-episode channel
/// bookkeeping (fixed set drawn at episode start, or redrawn every step).
class ThreatHarness {
 public:
  ThreatHarness(std::unique_ptr<Attacker> attacker, AttackBudget budget);

  void begin_episode(std::size_t n_channels, Rng& rng);
  /// Attack these channels in every episode, whatever the channel policy.
  void pin_channels(std::vector<std::size_t> channels);
  MessageSet apply(const MessageSet& benign, const Environment* env, const EnsemblePolicy* victim,
                   std::uint64_t victim_seed, Rng& rng);

  const AttackBudget& budget() const noexcept { return budget_; }
  const Attacker& attacker() const noexcept { return *attacker_; }
  const std::vector<std::size_t>& fixed_channels() const noexcept { return fixed_; }

 private:
  std::unique_ptr<Attacker> attacker_;
  AttackBudget budget_;
  std::vector<std::size_t> fixed_;
  std::optional<std::vector<std::size_t>> pinned_;
  std::size_t n_channels_ = 0;
};

/// Uniformly random C-subset of {0..n-1}, sorted.
std::vector<std::size_t> choose_channels(std::size_t n_channels, std::size_t count, Rng& rng);

}  // namespace ame
