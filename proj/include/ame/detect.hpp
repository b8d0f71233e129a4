#pragma once

// Action-bias detection: with k = 1, each channel induces its own action;
// channels whose action sits far from the element-wise median are suspects.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ame/certmath.hpp"
#include "ame/message.hpp"
#include "ame/policy.hpp"

namespace ame {

inline constexpr std::size_t kDefaultBiasWindow = 20;

struct BiasScore {
  std::size_t channel = 0;
  double beta = 0.0;
  std::size_t episodes_averaged = 1;
};

/// beta_j = || a_j - median_i a_i ||_1 with a_j the base action on channel j
/// alone. Discrete actions are one-hot embedded. Needs at least 3 channels.
std::vector<BiasScore> action_bias(const AblationPolicy& policy, const History& history,
                                   const MessageSet& msgs);

/// Per-episode means of per-step scores, then averaged over episodes.
class BiasAccumulator {
 public:
  explicit BiasAccumulator(std::size_t n_channels) : n_(n_channels), step_sum_(n_channels, 0.0), episode_sum_(n_channels, 0.0) {}

  void add_step(std::span<const BiasScore> scores);
  /// Closes the current episode; a no-op if it saw no steps.
  void end_episode();

  std::size_t episodes() const noexcept { return episodes_; }
  std::vector<BiasScore> average() const;

 private:
  std::size_t n_;
  std::vector<double> step_sum_;
  std::size_t steps_ = 0;
  std::vector<double> episode_sum_;
  std::size_t episodes_ = 0;
};

struct Recertification {
  std::vector<std::size_t> flagged;  // top-c channels by beta, highest first
  std::optional<std::size_t> previous_max_k;
  std::optional<std::size_t> new_max_k;
};

/// Flags the top-c channels and recomputes the largest certifiable k over the
/// N-1-c remaining messages with max(C-c, 0) adversaries. Ties in beta go to
/// the lower channel id.
Recertification flag_and_recertify(std::span<const BiasScore> scores, std::size_t c,
                                   std::size_t n_agents, std::size_t n_adversaries);

/// channel,beta,episodes
void write_bias_csv(std::ostream& out, std::span<const BiasScore> scores);

}  // namespace ame
