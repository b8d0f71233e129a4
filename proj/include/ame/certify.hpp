#pragma once

// Certificate evaluation: benign action sets, the two conditions, the
// brute-force oracle over an attack alphabet, and the reward bounds.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "ame/certmath.hpp"
#include "ame/ensemble.hpp"
#include "ame/environment.hpp"
#include "ame/episode.hpp"
#include "ame/policy.hpp"

namespace ame {

/// Actions the base policy takes on purely benign k-samples. Discrete: the
/// set of ids. Continuous: per-coordinate [lo, hi] envelope.
struct BenignActionSet {
  ActionKind kind = ActionKind::discrete;
  std::set<std::size_t> actions;
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(const Action& a) const;
  /// Coordinates of `a` outside the envelope (continuous only).
  std::vector<std::size_t> outside_coordinates(const Action& a) const;
  bool empty() const { return kind == ActionKind::discrete ? actions.empty() : lo.empty(); }
};

/// Evaluates the policy on every k-sample of the unperturbed message set.
BenignActionSet benign_action_set(const AblationPolicy& policy, const History& history,
                                  const MessageSet& benign_msgs, std::size_t k);

/// The distinct actions behind a discrete benign set, in id order.
std::vector<Action> benign_actions(const BenignActionSet& set);

struct ConditionCheck {
  bool condition1 = false;  // u_max > u_adv
  bool condition2 = false;  // 2 C(N-1-C, k) > C(N-1, k)
};

/// Condition 2 from (N, C, k); Condition 1 from the vote count when given.
ConditionCheck check_conditions(const EnsembleConfig& config,
                                std::optional<std::uint64_t> u_max = std::nullopt);
ConditionCheck check_conditions(const EnsembleConfig& config, const VoteTable& votes);

enum class Verdict { certified_benign, uncertified };

const char* to_string(Verdict v);

struct CertificateReport {
  std::size_t step = 0;
  std::uint64_t u_max = 0;
  BigInt u_adv = 0;
  bool condition1 = false;
  bool condition2 = false;
  Verdict verdict = Verdict::uncertified;
  /// 1 when the verdict is deterministic, p_D for partial ensembles.
  double certified_probability = 0.0;
  BenignActionSet benign_set;
  Action chosen_action;
  /// Harness ground truth: whether chosen_action actually lies in the set.
  bool in_benign_set = false;
};

/// Verdict rules: discrete actions are certified when Condition 1 holds,
/// continuous full ensembles when Condition 2 holds. A continuous D-ensemble
/// is never certified outright; certified_probability carries p_D instead.
CertificateReport certify_step(const AblationPolicy& policy, const EnsembleConfig& config,
                               std::size_t step, const History& history,
                               const MessageSet& benign, const EnsembleDecision& decision);

std::vector<CertificateReport> certify_trajectory(const AblationPolicy& policy,
                                                  const EnsembleConfig& config,
                                                  const Trajectory& trajectory);

/// True when every step was certified (the trajectory-level precondition).
bool all_certified(std::span<const CertificateReport> reports);

/// step,u_max,u_adv,cond1,cond2,verdict
void write_certificate_csv(std::ostream& out, std::span<const CertificateReport> reports);
/// One step per line: step,action,reward,tamper_mask,verdict.
void write_trajectory(std::ostream& out, const Trajectory& trajectory,
                      std::span<const CertificateReport> reports);

// ---------------------------------------------------------------------------
// Oracle

struct OracleOptions {
  /// Only check perturbations where the relevant condition holds. Turning
  /// this off probes whether the condition is needed at all.
  bool require_condition = true;
  /// Also try "leave this channel benign" for each attacked channel, so
  /// smaller corruptions are covered too.
  bool include_benign_choice = true;
  std::uint64_t budget = 1000000;
  Execution exec = Execution::sequential;
};

struct OracleViolation {
  std::vector<std::size_t> channels;
  std::vector<Payload> payloads;
  Action action;
  bool condition_held = false;
};

struct OracleReport {
  std::vector<OracleViolation> violations;
  std::uint64_t perturbations = 0;
  std::uint64_t condition_held = 0;
  BenignActionSet benign_set;

  bool sound() const { return violations.empty(); }
};

/// Number of perturbations the oracle would enumerate.
std::uint64_t oracle_search_size(std::size_t n_channels, std::size_t C, std::size_t alphabet_size,
                                 bool include_benign_choice);

/// Every C-subset of channels times every assignment of alphabet payloads;
/// checks the full-ensemble action against A_benign (discrete) or its
/// envelope (continuous). Throws BudgetExceeded above options.budget.
OracleReport oracle_verify_action_certificate(const AblationPolicy& policy, const History& history,
                                              const MessageSet& benign_msgs,
                                              const EnsembleConfig& config,
                                              std::span<const Payload> alphabet,
                                              const OracleOptions& options = {});

/// Empirical behaviour of the D-ensemble on one attacked message set.
struct PartialSampleEstimate {
  std::uint64_t seeds = 0;
  /// Seeds whose D-sample meets the certificate's sampling event: fewer than
  /// u_threshold tainted draws (discrete) or a strict clean majority
  /// (continuous). A draw is tainted when it holds a masked channel.
  std::uint64_t event_count = 0;
  /// Seeds whose D-ensemble action landed inside A_benign / the envelope.
  std::uint64_t benign_count = 0;
  double predicted = 0.0;

  double event_rate() const { return seeds ? double(event_count) / double(seeds) : 0.0; }
  double benign_rate() const { return seeds ? double(benign_count) / double(seeds) : 0.0; }
  /// Standard error of the predicted rate over `seeds` Bernoulli draws.
  double standard_error() const;
};

/// Draws `seeds` D-samples over the attacked set and compares against p_D.
/// Discrete configs need `u_threshold`, the vote count p_D is evaluated at.
PartialSampleEstimate estimate_partial_certification(
    const AblationPolicy& policy, const History& history, const MessageSet& benign,
    const MessageSet& attacked, const EnsembleConfig& config, std::uint64_t seeds,
    std::uint64_t base_seed, std::optional<std::uint64_t> u_threshold = std::nullopt);

// ---------------------------------------------------------------------------
// Reward certificates

/// Lowest of the supplied clean ablation returns. Throws InvalidRange on empty input.
double reward_lower_bound_discrete(std::span<const double> clean_returns);

/// Returns from `streams` clean rollouts of the base policy, each step acting
/// on one uniformly drawn k-sample. `env` must be freshly reset; it is cloned.
std::vector<double> clean_ablation_returns(const Environment& env, const AblationPolicy& policy,
                                           std::size_t k, std::uint64_t streams,
                                           std::uint64_t seed, double gamma = kDefaultGamma);

/// Minimum clean return over every ablation-index stream, found by branching
/// on the distinct benign actions at each step (discrete policies only).
/// Throws BudgetExceeded when more than `node_budget` states are expanded.
double exact_min_clean_return(const Environment& env, const AblationPolicy& policy, std::size_t k,
                              double gamma = kDefaultGamma, std::uint64_t node_budget = 10000000);

struct DiscrepancyEstimate {
  double eps_R = 0.0;
  double eps_P = 0.0;
  double V_max = 0.0;
  double gamma = kDefaultGamma;
  /// Index into the state sample and the action pair that attained eps_R.
  std::optional<std::size_t> witness_state;
  std::optional<std::pair<Action, Action>> witness_actions;
  std::uint64_t states = 0;
};

/// Horizon value bound: per-step reward bound times (1 - gamma^T) / (1 - gamma).
double value_bound(double reward_bound, double gamma, std::size_t horizon);

/// Sampled sup of |R(s,a1) - R(s,a2)| and the point-mass transition
/// distance over a1, a2 in Range(A_benign), per sampled state. Continuous
/// ranges are gridded with `grid_points` values per coordinate (corners
/// included); discrete ranges use A_benign itself.
DiscrepancyEstimate estimate_discrepancy(std::span<const Environment* const> states,
                                         const AblationPolicy& policy, std::size_t k,
                                         double gamma = kDefaultGamma,
                                         std::size_t grid_points = 5);

/// V_clean - (eps_R + gamma V_max eps_P) / (1 - gamma). Throws InvalidRange for gamma >= 1.
double reward_bound_continuous(const DiscrepancyEstimate& est, double v_clean);

}  // namespace ame
