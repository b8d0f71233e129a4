#pragma once

// Small symbolic / toy instances the oracle suite ships with.

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ame/certify.hpp"
#include "ame/detect.hpp"
#include "ame/experiment.hpp"

namespace ame {

struct OracleInstance {
  std::string name;
  std::shared_ptr<const AblationPolicy> policy;
  History history;
  MessageSet benign;
  EnsembleConfig config;
  std::vector<Payload> alphabet;
  OracleOptions options;
  /// False for instances built to break a condition.
  bool expect_sound = true;
};

/// Plurality over symbols (ties to the lowest symbol); action = symbol.
std::shared_ptr<const AblationPolicy> plurality_policy(std::size_t n_symbols);
/// Sum of symbols modulo n_symbols.
std::shared_ptr<const AblationPolicy> sum_mod_policy(std::size_t n_symbols);
/// Coordinate-wise mean of the sampled payloads.
std::shared_ptr<const AblationPolicy> mean_policy(std::size_t dim);

/// N=6, C=1, k=2, three-symbol alphabet.
OracleInstance default_discrete_instance();
std::vector<OracleInstance> shipped_discrete_instances();
std::vector<OracleInstance> shipped_continuous_instances();
/// Continuous, N=6, C=1, k=4: Condition 2 fails and the oracle is run
/// without requiring it, so counterexamples show up.
OracleInstance broken_instance();

struct PartialCheck {
  std::string name;
  PartialSampleEstimate estimate;
  /// Sampling-event rate within 3 standard errors of p_D, and the benign
  /// rate not more than 3 standard errors below it.
  bool passed = false;
};

std::vector<PartialCheck> run_partial_checks(std::uint64_t seeds, std::uint64_t base_seed);

struct RewardCheck {
  std::size_t episodes = 0;
  /// Episodes whose every step was certified (the bound's precondition).
  std::size_t preconditioned = 0;
  std::size_t violations = 0;
  /// Smallest (attacked return - bound) over preconditioned episodes.
  double worst_margin = std::numeric_limits<double>::infinity();
  double max_eps_R = 0.0;
  double max_eps_P = 0.0;
  /// Episodes that would also meet the bound with eps_P taken as 0.
  std::size_t reward_term_only_holds = 0;
};

/// Discrete reward certificate: attacked full-ensemble return against the
/// exact minimum clean ablation return from the same start state.
RewardCheck check_discrete_reward_certificate(const ExperimentConfig& config);

/// Continuous reward certificate: attacked return against
/// V_clean - (eps_R + gamma V_max eps_P) / (1 - gamma), with V_clean the mean
/// of `clean_streams` clean ablation rollouts and eps estimated over the
/// states of the attacked trajectory.
RewardCheck check_continuous_reward_certificate(const ExperimentConfig& config,
                                                std::uint64_t clean_streams = 200,
                                                std::size_t grid_points = 5);

struct DetectionRun {
  std::vector<std::size_t> attacked_channels;
  std::vector<BiasScore> scores;
};

/// Runs `window` attacked episodes with the attacked channels pinned to a
/// draw from the attack seed, scoring every received message set with the
/// k = 1 base policy.
DetectionRun run_detection(const ExperimentConfig& config, std::size_t window = kDefaultBiasWindow);

}  // namespace ame
