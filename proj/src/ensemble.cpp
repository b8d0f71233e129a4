#include "ame/ensemble.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>

#include "ame/certmath.hpp"
#include "ame/errors.hpp"

namespace ame {
namespace {

using PascalRow = std::array<std::uint64_t, kMaxEnumerableAgents + 1>;

const std::array<PascalRow, kMaxEnumerableAgents + 1>& pascal() {
  static const auto table = [] {
    std::array<PascalRow, kMaxEnumerableAgents + 1> t{};
    for (std::size_t n = 0; n <= kMaxEnumerableAgents; ++n) {
      t[n][0] = 1;
      for (std::size_t k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0);
    }
    return t;
  }();
  return table;
}

void check_k(std::size_t n_channels, std::size_t k) {
  if (n_channels > kMaxEnumerableAgents) {
    throw InvalidRange("at most " + std::to_string(kMaxEnumerableAgents) +
                       " channels can be enumerated, got " + std::to_string(n_channels));
  }
  if (k < 1 || k > n_channels) {
    throw InvalidRange("ablation size k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(n_channels) + "]");
  }
}

KSample materialize(const MessageSet& msgs, const Combination& c) {
  KSample s;
  s.indices = c;
  s.payloads.reserve(c.size());
  for (std::size_t i : c) s.payloads.push_back(msgs.messages[i].payload);
  return s;
}

#ifndef NDEBUG
bool same_action(const Action& a, const Action& b) {
  if (a.is_discrete() != b.is_discrete()) return false;
  if (a.is_discrete()) return a.id() == b.id();
  if (a.vec().size() != b.vec().size()) return false;
  for (std::size_t i = 0; i < a.vec().size(); ++i) {
    const double scale = std::max({1.0, std::abs(a.vec()[i]), std::abs(b.vec()[i])});
    if (std::abs(a.vec()[i] - b.vec()[i]) > 1e-9 * scale) return false;
  }
  return true;
}

// Debug builds re-evaluate one sample with its messages reversed; a base
// policy that reacts to message order breaks the permutation invariance the
// ensemble relies on.
void check_symmetry(const AblationPolicy& policy, const History& history, const MessageSet& msgs,
                    const Combination& c, const Action& forward) {
  if (c.size() < 2) return;
  Combination reversed(c.rbegin(), c.rend());
  const Action backward = policy.act(history, KSampleView(msgs, reversed));
  if (!same_action(forward, backward)) {
    throw std::logic_error("base policy is not symmetric in its k messages");
  }
}
#endif

}  // namespace

std::uint64_t EnsembleDecision::top_votes() const {
  std::uint64_t best = 0;
  for (const auto& [id, n] : votes) best = std::max(best, n);
  return best;
}

std::uint64_t small_binomial(std::size_t n, std::size_t k) {
  if (n > kMaxEnumerableAgents) throw InvalidRange("small_binomial: n > 64");
  if (k > n) return 0;
  return pascal()[n][k];
}

bool next_combination(std::span<std::size_t> c, std::size_t n) {
  const std::size_t k = c.size();
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<Combination> enumerate_combinations(std::size_t n, std::size_t k) {
  check_k(n, k);
  std::vector<Combination> out;
  out.reserve(small_binomial(n, k));
  Combination c(k);
  std::iota(c.begin(), c.end(), std::size_t{0});
  do {
    out.push_back(c);
  } while (next_combination(c, n));
  return out;
}

Combination unrank_combination(std::uint64_t rank, std::size_t n, std::size_t k) {
  check_k(n, k);
  if (rank >= small_binomial(n, k)) throw InvalidRange("combination rank out of range");
  Combination c;
  c.reserve(k);
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < k; ++slot) {
    for (std::size_t v = next;; ++v) {
      // Combinations starting with v at this slot.
      const std::uint64_t block = small_binomial(n - 1 - v, k - 1 - slot);
      if (rank < block) {
        c.push_back(v);
        next = v + 1;
        break;
      }
      rank -= block;
    }
  }
  return c;
}

std::uint64_t rank_combination(std::span<const std::size_t> c, std::size_t n) {
  const std::size_t k = c.size();
  check_k(n, k);
  std::uint64_t rank = 0;
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < k; ++slot) {
    for (std::size_t v = next; v < c[slot]; ++v) rank += small_binomial(n - 1 - v, k - 1 - slot);
    next = c[slot] + 1;
  }
  return rank;
}

std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population, std::uint64_t count,
                                                      Rng& rng) {
  if (count > population) throw InvalidRange("cannot draw more items than the population");
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + rng.uniform_index(population - i);
    const std::uint64_t vi = at(i);
    const std::uint64_t vj = at(j);
    out.push_back(vj);
    swapped[j] = vi;
  }
  return out;
}

std::vector<KSample> enumerate_k_samples(const MessageSet& msgs, std::size_t k) {
  std::vector<KSample> out;
  for (const auto& c : enumerate_combinations(msgs.size(), k)) out.push_back(materialize(msgs, c));
  return out;
}

std::vector<Combination> sample_combinations(std::size_t n_channels, std::size_t k,
                                             std::uint64_t sample_size, std::uint64_t seed) {
  check_k(n_channels, k);
  const std::uint64_t n1 = small_binomial(n_channels, k);
  if (sample_size < 1 || sample_size > n1) {
    throw InvalidRange("sample size D=" + std::to_string(sample_size) + " outside [1, " +
                       std::to_string(n1) + "]");
  }
  Rng rng(seed);
  std::vector<Combination> out;
  out.reserve(sample_size);
  for (std::uint64_t r : sample_without_replacement(n1, sample_size, rng)) {
    out.push_back(unrank_combination(r, n_channels, k));
  }
  return out;
}

std::vector<KSample> sample_k_samples(const MessageSet& msgs, std::size_t k,
                                      std::uint64_t sample_size, std::uint64_t seed) {
  std::vector<KSample> out;
  for (const auto& c : sample_combinations(msgs.size(), k, sample_size, seed)) {
    out.push_back(materialize(msgs, c));
  }
  return out;
}

std::vector<Action> evaluate_base_actions(const AblationPolicy& policy, const History& history,
                                          const MessageSet& msgs,
                                          std::span<const Combination> samples, Execution exec) {
  std::vector<Action> out(samples.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = policy.act(history, KSampleView(msgs, samples[i]));
    }
  };
  const std::size_t workers =
      exec == Execution::parallel
          ? std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), samples.size())
          : 1;
  if (workers <= 1) {
    run(0, samples.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (samples.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(samples.size(), begin + chunk);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
    for (auto& t : pool) t.join();
  }
#ifndef NDEBUG
  if (!samples.empty()) check_symmetry(policy, history, msgs, samples.front(), out.front());
#endif
  return out;
}

Action majority_vote(const VoteTable& votes) {
  if (votes.empty()) throw InvalidRange("majority vote over an empty vote table");
  // std::map iterates ids in ascending order, so the first maximum wins ties.
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return Action::discrete(best->first);
}

std::vector<double> coordinate_median(std::span<const std::vector<double>> values) {
  if (values.empty()) throw InvalidRange("median of an empty set");
  const std::size_t dim = values.front().size();
  std::vector<double> out(dim);
  std::vector<double> column(values.size());
  const std::size_t n = values.size();
  for (std::size_t l = 0; l < dim; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i].size() != dim) throw DimensionMismatch("median over vectors of unequal size");
      column[i] = values[i][l];
    }
    auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(column.begin(), mid, column.end());
    if (n % 2 == 1) {
      out[l] = *mid;
    } else {
      const double upper = *mid;
      const double lower = *std::max_element(column.begin(), mid);
      out[l] = lower + (upper - lower) / 2;
    }
  }
  return out;
}

EnsembleDecision aggregate(const AblationPolicy& policy, std::span<const Action> base_actions) {
  EnsembleDecision d;
  d.evaluated = base_actions.size();
  if (policy.action_kind() == ActionKind::discrete) {
    for (const Action& a : base_actions) {
      if (!a.is_discrete() || a.id() >= policy.action_size()) {
        throw InvalidRange("base policy returned an action outside its discrete action set");
      }
      ++d.votes[a.id()];
    }
    d.action = majority_vote(d.votes);
  } else {
    std::vector<std::vector<double>> vecs;
    vecs.reserve(base_actions.size());
    for (const Action& a : base_actions) {
      if (a.is_discrete() || a.vec().size() != policy.action_size()) {
        throw DimensionMismatch("base policy returned an action of dimension other than " +
                                std::to_string(policy.action_size()));
      }
      vecs.push_back(a.vec());
    }
    d.action = Action::continuous(coordinate_median(vecs));
  }
  return d;
}

namespace {

EnsembleDecision full_ensemble(const AblationPolicy& policy, const History& history,
                               const MessageSet& msgs, std::size_t k, Execution exec) {
  const auto samples = enumerate_combinations(msgs.size(), k);
  const auto actions = evaluate_base_actions(policy, history, msgs, samples, exec);
  return aggregate(policy, actions);
}

}  // namespace

EnsembleDecision ensemble_act_discrete(const AblationPolicy& policy, const History& history,
                                       const MessageSet& msgs, std::size_t k, Execution exec) {
  if (policy.action_kind() != ActionKind::discrete) {
    throw InvalidRange("ensemble_act_discrete needs a discrete policy");
  }
  return full_ensemble(policy, history, msgs, k, exec);
}

EnsembleDecision ensemble_act_continuous(const AblationPolicy& policy, const History& history,
                                         const MessageSet& msgs, std::size_t k, Execution exec) {
  if (policy.action_kind() != ActionKind::continuous) {
    throw InvalidRange("ensemble_act_continuous needs a continuous policy");
  }
  return full_ensemble(policy, history, msgs, k, exec);
}

EnsembleDecision ensemble_act(const AblationPolicy& policy, const History& history,
                              const MessageSet& msgs, std::size_t k, Execution exec) {
  return full_ensemble(policy, history, msgs, k, exec);
}

EnsembleDecision ensemble_act_partial(const AblationPolicy& policy, const History& history,
                                      const MessageSet& msgs, std::size_t k,
                                      std::uint64_t sample_size, std::uint64_t seed,
                                      Execution exec) {
  const auto samples = sample_combinations(msgs.size(), k, sample_size, seed);
  const auto actions = evaluate_base_actions(policy, history, msgs, samples, exec);
  return aggregate(policy, actions);
}

EnsemblePolicy::EnsemblePolicy(const AblationPolicy& base, std::size_t k,
                               std::optional<std::uint64_t> sample_size, Execution exec)
    : base_(&base), k_(k), sample_size_(sample_size), exec_(exec) {
  if (k < 1) throw InvalidRange("ablation size must be at least 1");
  if (sample_size && *sample_size < 1) throw InvalidRange("sample size must be at least 1");
}

bool EnsemblePolicy::uses_seed(std::size_t n_channels) const {
  return sample_size_ && *sample_size_ < small_binomial(n_channels, k_);
}

EnsembleDecision EnsemblePolicy::act(const History& history, const MessageSet& msgs,
                                     std::uint64_t seed) const {
  if (sample_size_) {
    return ensemble_act_partial(*base_, history, msgs, k_, *sample_size_, seed, exec_);
  }
  return ensemble_act(*base_, history, msgs, k_, exec_);
}

}  // namespace ame
