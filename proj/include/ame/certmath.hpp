#pragma once

// Closed-form combinatorics behind the ensemble certificates. Everything is
// evaluated in exact integer / rational arithmetic; doubles only appear in the
// *_prob convenience wrappers used for reporting.

#include <cstddef>
#include <cstdint>
#include <optional>

#include <boost/multiprecision/cpp_int.hpp>

namespace ame {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class ActionKind { discrete, continuous };

/// Largest agent count accepted by the closed-form paths.
inline constexpr std::size_t kMaxClosedFormAgents = 512;
/// Largest agent count accepted by paths that enumerate or sample k-samples.
inline constexpr std::size_t kMaxEnumerableAgents = 64;

/// C(n, r); zero when r > n.
BigInt binomial(std::uint64_t n, std::uint64_t r);
BigInt binomial(const BigInt& n, std::uint64_t r);

/// (N, C, k, D, action kind). n1, n2 and u_adv are derived on every call.
class EnsembleConfig {
 public:
  /// Throws InvalidRange unless N >= 2, C <= N-1, 1 <= k <= N-1 and
  /// 1 <= D <= C(N-1, k). An absent D means the full ensemble (D = n1).
  EnsembleConfig(std::size_t n_agents, std::size_t n_adversaries, std::size_t ablation_size,
                 std::optional<std::uint64_t> sample_size = std::nullopt,
                 ActionKind kind = ActionKind::discrete);

  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t n_channels() const noexcept { return n_agents_ - 1; }
  std::size_t n_adversaries() const noexcept { return n_adversaries_; }
  std::size_t ablation_size() const noexcept { return ablation_size_; }
  ActionKind action_kind() const noexcept { return kind_; }
  bool is_partial() const noexcept { return sample_size_.has_value(); }
  std::optional<std::uint64_t> requested_sample_size() const noexcept { return sample_size_; }

  /// D, or n1 for the full ensemble. Throws InvalidRange if n1 does not fit.
  std::uint64_t sample_size() const;

  BigInt n1() const;     // C(N-1, k)
  BigInt n2() const;     // C(N-1-C, k)
  BigInt u_adv() const;  // n1 - n2

 private:
  std::size_t n_agents_;
  std::size_t n_adversaries_;
  std::size_t ablation_size_;
  std::optional<std::uint64_t> sample_size_;
  ActionKind kind_;
};

/// Attacking-power assumption: C < (N-1)/2.
bool assumption_holds(std::size_t n_agents, std::size_t n_adversaries);

/// Condition 2: C(N-1-C, k) > C(N-1, k) / 2. Throws InvalidRange for k outside [1, N-1].
bool dominating_benign_holds(std::size_t n_agents, std::size_t n_adversaries, std::size_t k);

/// Largest k satisfying Condition 2, or nullopt when no k does (C >= (N-1)/2).
std::optional<std::size_t> max_certifiable_k(std::size_t n_agents, std::size_t n_adversaries);

/// Largest C satisfying Condition 2 for this k (0 if only the clean case does).
std::size_t max_certifiable_C(std::size_t n_agents, std::size_t k);

/// u_adv = C(N-1, k) - C(N-1-C, k): k-samples that contain at least one
/// adversarial channel.
BigInt adversarial_vote_bound(std::size_t n_agents, std::size_t n_adversaries, std::size_t k);

/// Probability that a uniformly drawn D-subset of the k-samples still makes
/// the majority-vote action certified given its vote count u_max. 1 when
/// u_max > n1 - n2, otherwise sum_{j<u_max} C(n1-n2, j) C(n2, D-j) / C(n1, D).
Rational partial_sample_prob_discrete_exact(std::size_t n_agents, std::size_t n_adversaries,
                                            std::size_t k, std::uint64_t sample_size,
                                            std::uint64_t u_max);
double partial_sample_prob_discrete(std::size_t n_agents, std::size_t n_adversaries, std::size_t k,
                                    std::uint64_t sample_size, std::uint64_t u_max);

/// Probability that purely benign k-samples are a strict majority of a
/// uniformly drawn D-subset. Throws ConditionViolated when Condition 2 fails.
Rational partial_sample_prob_continuous_exact(std::size_t n_agents, std::size_t n_adversaries,
                                              std::size_t k, std::uint64_t sample_size);
double partial_sample_prob_continuous(std::size_t n_agents, std::size_t n_adversaries, std::size_t k,
                                      std::uint64_t sample_size);

double to_double(const Rational& q);

}  // namespace ame
