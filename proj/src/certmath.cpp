#include "ame/certmath.hpp"

#include <algorithm>
#include <string>

#include "ame/errors.hpp"

namespace ame {
namespace {

void check_agents(std::size_t n_agents) {
  if (n_agents < 2 || n_agents > kMaxClosedFormAgents) {
    throw InvalidRange("agent count " + std::to_string(n_agents) + " outside [2, " +
                       std::to_string(kMaxClosedFormAgents) + "]");
  }
}

void check_ablation(std::size_t n_agents, std::size_t k) {
  check_agents(n_agents);
  if (k < 1 || k > n_agents - 1) {
    throw InvalidRange("ablation size k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(n_agents - 1) + "]");
  }
}

void check_adversaries(std::size_t n_agents, std::size_t n_adversaries) {
  if (n_adversaries > n_agents - 1) {
    throw InvalidRange("adversary count " + std::to_string(n_adversaries) + " exceeds N-1=" +
                       std::to_string(n_agents - 1));
  }
}

// sum_{j=lo}^{hi} C(a, j) * C(b, d - j), skipping vanishing terms.
BigInt convolution_sum(const BigInt& a, const BigInt& b, std::uint64_t d, std::uint64_t lo,
                       std::uint64_t hi) {
  // Nonzero terms need j <= a and d - j <= b.
  std::uint64_t j_lo = lo;
  if (b < d) j_lo = std::max<std::uint64_t>(j_lo, static_cast<std::uint64_t>(BigInt(d) - b));
  std::uint64_t j_hi = std::min<std::uint64_t>(hi, d);
  if (a < j_hi) j_hi = static_cast<std::uint64_t>(a);
  if (j_lo > j_hi) return 0;

  BigInt left = binomial(a, j_lo);
  BigInt right = binomial(b, d - j_lo);
  BigInt sum = left * right;
  for (std::uint64_t j = j_lo; j < j_hi; ++j) {
    // C(a, j+1) = C(a, j) (a - j) / (j + 1)
    left = left * (a - j) / (j + 1);
    // C(b, d-j-1) = C(b, d-j) (d - j) / (b - d + j + 1)
    right = right * (d - j) / (b - (d - j) + 1);
    sum += left * right;
  }
  return sum;
}

}  // namespace

BigInt binomial(const BigInt& n, std::uint64_t r) {
  if (n < r) return 0;
  // Use the shorter side of the symmetry.
  if (BigInt(2) * r > n) r = static_cast<std::uint64_t>(n - r);
  BigInt out = 1;
  for (std::uint64_t i = 0; i < r; ++i) out = out * (n - i) / (i + 1);
  return out;
}

BigInt binomial(std::uint64_t n, std::uint64_t r) { return binomial(BigInt(n), r); }

EnsembleConfig::EnsembleConfig(std::size_t n_agents, std::size_t n_adversaries,
                               std::size_t ablation_size, std::optional<std::uint64_t> sample_size,
                               ActionKind kind)
    : n_agents_(n_agents),
      n_adversaries_(n_adversaries),
      ablation_size_(ablation_size),
      sample_size_(sample_size),
      kind_(kind) {
  check_ablation(n_agents, ablation_size);
  check_adversaries(n_agents, n_adversaries);
  if (sample_size_) {
    if (*sample_size_ < 1 || n1() < *sample_size_) {
      throw InvalidRange("sample size D=" + std::to_string(*sample_size_) + " outside [1, n1]");
    }
  }
}

BigInt EnsembleConfig::n1() const { return binomial(n_agents_ - 1, ablation_size_); }
BigInt EnsembleConfig::n2() const {
  return binomial(n_agents_ - 1 - n_adversaries_, ablation_size_);
}
BigInt EnsembleConfig::u_adv() const { return n1() - n2(); }

std::uint64_t EnsembleConfig::sample_size() const {
  if (sample_size_) return *sample_size_;
  const BigInt total = n1();
  if (total > BigInt(UINT64_MAX)) throw InvalidRange("n1 does not fit a 64-bit sample size");
  return static_cast<std::uint64_t>(total);
}

bool assumption_holds(std::size_t n_agents, std::size_t n_adversaries) {
  return 2 * n_adversaries + 1 < n_agents;
}

bool dominating_benign_holds(std::size_t n_agents, std::size_t n_adversaries, std::size_t k) {
  check_ablation(n_agents, k);
  check_adversaries(n_agents, n_adversaries);
  return 2 * binomial(n_agents - 1 - n_adversaries, k) > binomial(n_agents - 1, k);
}

std::optional<std::size_t> max_certifiable_k(std::size_t n_agents, std::size_t n_adversaries) {
  check_agents(n_agents);
  if (n_adversaries > n_agents - 1) return std::nullopt;
  // Downward closed in k, so the feasible set is a prefix [1, k0].
  std::optional<std::size_t> best;
  for (std::size_t k = 1; k <= n_agents - 1; ++k) {
    if (!dominating_benign_holds(n_agents, n_adversaries, k)) break;
    best = k;
  }
  return best;
}

std::size_t max_certifiable_C(std::size_t n_agents, std::size_t k) {
  check_ablation(n_agents, k);
  std::size_t best = 0;
  for (std::size_t c = 1; c <= n_agents - 1; ++c) {
    if (!dominating_benign_holds(n_agents, c, k)) break;
    best = c;
  }
  return best;
}

BigInt adversarial_vote_bound(std::size_t n_agents, std::size_t n_adversaries, std::size_t k) {
  check_ablation(n_agents, k);
  check_adversaries(n_agents, n_adversaries);
  return binomial(n_agents - 1, k) - binomial(n_agents - 1 - n_adversaries, k);
}

Rational partial_sample_prob_discrete_exact(std::size_t n_agents, std::size_t n_adversaries,
                                            std::size_t k, std::uint64_t sample_size,
                                            std::uint64_t u_max) {
  const EnsembleConfig cfg(n_agents, n_adversaries, k, sample_size);
  if (u_max > sample_size) {
    throw InvalidRange("u_max=" + std::to_string(u_max) + " exceeds D=" +
                       std::to_string(sample_size));
  }
  const BigInt n1 = cfg.n1();
  const BigInt n2 = cfg.n2();
  if (BigInt(u_max) > n1 - n2) return Rational(1);
  if (u_max == 0) return Rational(0);
  const BigInt hits = convolution_sum(n1 - n2, n2, sample_size, 0, u_max - 1);
  return Rational(hits, binomial(n1, sample_size));
}

Rational partial_sample_prob_continuous_exact(std::size_t n_agents, std::size_t n_adversaries,
                                              std::size_t k, std::uint64_t sample_size) {
  const EnsembleConfig cfg(n_agents, n_adversaries, k, sample_size);
  if (!dominating_benign_holds(n_agents, n_adversaries, k)) {
    throw ConditionViolated("Condition 2 fails for N=" + std::to_string(n_agents) +
                            ", C=" + std::to_string(n_adversaries) + ", k=" + std::to_string(k));
  }
  const BigInt n1 = cfg.n1();
  const BigInt n2 = cfg.n2();
  // Benign draws j run over [floor(D/2)+1, D]; the convolution is symmetric
  // in which side is called "left", so put the benign count on the left.
  const BigInt hits = convolution_sum(n2, n1 - n2, sample_size, sample_size / 2 + 1, sample_size);
  return Rational(hits, binomial(n1, sample_size));
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

double partial_sample_prob_discrete(std::size_t n_agents, std::size_t n_adversaries, std::size_t k,
                                    std::uint64_t sample_size, std::uint64_t u_max) {
  return to_double(
      partial_sample_prob_discrete_exact(n_agents, n_adversaries, k, sample_size, u_max));
}

double partial_sample_prob_continuous(std::size_t n_agents, std::size_t n_adversaries, std::size_t k,
                                      std::uint64_t sample_size) {
  return to_double(partial_sample_prob_continuous_exact(n_agents, n_adversaries, k, sample_size));
}

}  // namespace ame
