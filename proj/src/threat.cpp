#include "ame/threat.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "ame/errors.hpp"

namespace ame {
namespace {

// Mask a channel only when its payload actually changes, so the mask names
// exactly the channels that differ from the benign set.
void rewrite(MessageSet& set, std::size_t channel, Payload payload) {
  if (set.messages.at(channel).payload != payload) {
    set.messages[channel].payload = std::move(payload);
    set.tamper_mask[channel] = true;
  }
}

Payload draw_payload(const PayloadDomain& domain, Rng& rng) {
  if (domain.is_finite()) return domain.alphabet[rng.uniform_index(domain.alphabet.size())];
  Payload p(domain.lo.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(domain.lo[i], domain.hi[i]);
  return p;
}

void check_channels(const AttackContext& ctx, const MessageSet& benign, const AttackBudget& budget) {
  if (ctx.channels.size() > budget.max_corrupted) {
    throw InvalidRange("attacker handed more channels than its budget");
  }
  for (std::size_t c : ctx.channels) {
    if (c >= benign.size()) throw InvalidRange("attacked channel out of range");
  }
}

}  // namespace

PayloadDomain PayloadDomain::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size()) throw DimensionMismatch("payload box bounds differ in size");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) throw InvalidRange("payload box with lo > hi");
  }
  PayloadDomain d;
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

PayloadDomain PayloadDomain::finite(std::vector<Payload> alphabet) {
  if (alphabet.empty()) throw InvalidRange("empty payload alphabet");
  PayloadDomain d;
  d.alphabet = std::move(alphabet);
  return d;
}

bool PayloadDomain::contains(const Payload& p) const {
  if (is_finite()) return std::find(alphabet.begin(), alphabet.end(), p) != alphabet.end();
  if (p.size() != lo.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  }
  return true;
}

void AttackBudget::validate(std::size_t n_channels) const {
  if (max_corrupted > n_channels) {
    throw InvalidRange("budget C=" + std::to_string(max_corrupted) + " exceeds the " +
                       std::to_string(n_channels) + " channels");
  }
  if (!stress && 2 * max_corrupted >= n_channels && max_corrupted > 0) {
    throw InvalidRange("budget C=" + std::to_string(max_corrupted) +
                       " breaks C < (N-1)/2; enable stress mode to allow it");
  }
}

std::vector<std::size_t> choose_channels(std::size_t n_channels, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  for (std::uint64_t v : sample_without_replacement(n_channels, count, rng)) {
    out.push_back(static_cast<std::size_t>(v));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> perm_attack(std::span<const double> demand, Rng& rng) {
  std::vector<double> out(demand.begin(), demand.end());
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[rng.uniform_index(i)]);
  }
  return out;
}

std::vector<double> swap_attack(std::span<const double> demand) {
  const std::size_t m = demand.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return demand[a] < demand[b]; });
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) out[order[r]] = demand[order[m - 1 - r]];
  return out;
}

std::vector<double> flip_attack(std::span<const double> demand) {
  if (demand.empty()) return {};
  const double eta =
      std::accumulate(demand.begin(), demand.end(), 0.0) / static_cast<double>(demand.size());
  std::vector<double> out(demand.size());
  for (std::size_t j = 0; j < demand.size(); ++j) out[j] = std::max(0.0, 2 * eta - demand[j]);
  return out;
}

MessageSet random_attack(const MessageSet& msgs, const AttackBudget& budget,
                         const PayloadDomain& domain, Rng& rng) {
  budget.validate(msgs.size());
  MessageSet out = msgs;
  for (std::size_t c : choose_channels(msgs.size(), budget.max_corrupted, rng)) {
    rewrite(out, c, draw_payload(domain, rng));
  }
  return out;
}

MessageSet RandomAttacker::attack(const AttackContext& ctx, const MessageSet& benign,
                                  const AttackBudget& budget, Rng& rng) const {
  check_channels(ctx, benign, budget);
  MessageSet out = benign;
  for (std::size_t c : ctx.channels) rewrite(out, c, draw_payload(domain_, rng));
  return out;
}

std::string DemandAttacker::name() const {
  switch (transform_) {
    case DemandTransform::perm:
      return "perm";
    case DemandTransform::swap:
      return "swap";
    case DemandTransform::flip:
      return "flip";
  }
  return "demand";
}

MessageSet DemandAttacker::attack(const AttackContext& ctx, const MessageSet& benign,
                                  const AttackBudget& budget, Rng& rng) const {
  check_channels(ctx, benign, budget);
  MessageSet out = benign;
  for (std::size_t c : ctx.channels) {
    const Payload& d = benign.payload(c);
    switch (transform_) {
      case DemandTransform::perm:
        rewrite(out, c, perm_attack(d, rng));
        break;
      case DemandTransform::swap:
        rewrite(out, c, swap_attack(d));
        break;
      case DemandTransform::flip:
        rewrite(out, c, flip_attack(d));
        break;
    }
  }
  return out;
}

MessageSet ExtremeAttacker::attack(const AttackContext& ctx, const MessageSet& benign,
                                   const AttackBudget& budget, Rng&) const {
  check_channels(ctx, benign, budget);
  if (domain_.is_finite()) throw InvalidRange("extreme attack needs a payload box");
  MessageSet out = benign;
  for (std::size_t c : ctx.channels) {
    const Payload& d = benign.payload(c);
    if (d.size() != domain_.lo.size()) throw DimensionMismatch("payload / box dimension mismatch");
    Payload p(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      p[i] = (d[i] - domain_.lo[i] < domain_.hi[i] - d[i]) ? domain_.hi[i] : domain_.lo[i];
    }
    rewrite(out, c, std::move(p));
  }
  return out;
}

MessageSet OffsetAttacker::attack(const AttackContext& ctx, const MessageSet& benign,
                                  const AttackBudget& budget, Rng&) const {
  check_channels(ctx, benign, budget);
  MessageSet out = benign;
  for (std::size_t c : ctx.channels) {
    Payload p = benign.payload(c);
    if (p.size() != offset_.size()) throw DimensionMismatch("offset / payload dimension mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += offset_[i];
    rewrite(out, c, std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model-based search

std::uint64_t attack_search_space(std::size_t n_channels, std::size_t budget,
                                  std::size_t n_candidates) {
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max() / 4;
  std::uint64_t total = 0;
  for (std::size_t s = 0; s <= std::min(budget, n_channels); ++s) {
    std::uint64_t term = small_binomial(n_channels, s);
    for (std::size_t i = 0; i < s; ++i) {
      if (n_candidates != 0 && term > cap / n_candidates) return cap;
      term *= n_candidates;
    }
    total += term;
    if (total >= cap) return cap;
  }
  return total;
}

namespace {

struct Perturbation {
  std::vector<std::size_t> channels;
  std::vector<std::size_t> choice;  // candidate index per channel
};

MessageSet apply_perturbation(const MessageSet& base, const Perturbation& p,
                              std::span<const Payload> candidates) {
  MessageSet out = base;
  for (std::size_t i = 0; i < p.channels.size(); ++i) {
    rewrite(out, p.channels[i], candidates[p.choice[i]]);
  }
  return out;
}

class Rollout {
 public:
  Rollout(const Environment& model, const EnsemblePolicy& victim, const MessageSet& first,
          std::span<const Payload> candidates, std::size_t horizon, std::uint64_t first_seed)
      : model_(model),
        victim_(victim),
        first_(first),
        candidates_(candidates),
        horizon_(horizon),
        first_seed_(first_seed) {}

  double operator()(const Perturbation& p) {
    ++evaluated;
    auto env = model_.clone();
    double total = 0.0;
    for (std::size_t t = 0; t < horizon_ && !env->done(); ++t) {
      const MessageSet benign = t == 0 ? first_ : env->benign_messages();
      const MessageSet seen = apply_perturbation(benign, p, candidates_);
      const std::uint64_t seed = t == 0 ? first_seed_ : derive_seed(first_seed_, t);
      total += env->step(victim_.act(env->history(), seen, seed).action).reward;
    }
    return total;
  }

  std::uint64_t evaluated = 0;

 private:
  const Environment& model_;
  const EnsemblePolicy& victim_;
  const MessageSet& first_;
  std::span<const Payload> candidates_;
  std::size_t horizon_;
  std::uint64_t first_seed_;
};

}  // namespace

GreedySearchResult greedy_adaptive_attack(const Environment& env_model,
                                          const EnsemblePolicy& victim, const MessageSet& msgs,
                                          const AttackBudget& budget,
                                          std::span<const Payload> candidates,
                                          const GreedySearchOptions& options, Rng& rng,
                                          std::uint64_t victim_seed) {
  if (options.horizon < 1) throw InvalidRange("search horizon must be at least 1");
  budget.validate(msgs.size());
  std::vector<std::size_t> allowed = options.allowed_channels;
  if (allowed.empty()) {
    allowed.resize(msgs.size());
    std::iota(allowed.begin(), allowed.end(), std::size_t{0});
  }
  const std::size_t max_size = std::min(budget.max_corrupted, allowed.size());
  const std::uint64_t first_seed =
      options.seed_mode == SeedMode::aware ? victim_seed : rng.next();

  Rollout rollout(env_model, victim, msgs, candidates, options.horizon, first_seed);
  Perturbation best;
  double best_return = rollout(best);

  const std::uint64_t space = attack_search_space(allowed.size(), max_size, candidates.size());
  const bool exhaustive = space <= options.exhaustive_limit;

  if (candidates.empty() || max_size == 0) {
    // Nothing to try beyond the benign set.
  } else if (exhaustive) {
    for (std::size_t s = 1; s <= max_size; ++s) {
      Combination pick(s);
      std::iota(pick.begin(), pick.end(), std::size_t{0});
      do {
        Perturbation p;
        for (std::size_t i : pick) p.channels.push_back(allowed[i]);
        p.choice.assign(s, 0);
        while (true) {
          const double r = rollout(p);
          if (r < best_return) {
            best_return = r;
            best = p;
          }
          // Mixed-radix increment over candidate indices.
          std::size_t pos = s;
          while (pos > 0 && ++p.choice[pos - 1] == candidates.size()) p.choice[--pos] = 0;
          if (pos == 0) break;
        }
      } while (next_combination(pick, allowed.size()));
    }
  } else {
    // Greedy coordinate descent over per-channel options (benign or one of
    // the candidates), taking the best single change per pass.
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> assign(allowed.size(), kNone);
    auto to_perturbation = [&](const std::vector<std::size_t>& a) {
      Perturbation p;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != kNone) {
          p.channels.push_back(allowed[i]);
          p.choice.push_back(a[i]);
        }
      }
      return p;
    };
    const std::size_t max_passes = 4 * max_size + 4;
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      const std::size_t used =
          static_cast<std::size_t>(std::count_if(assign.begin(), assign.end(),
                                                 [&](std::size_t v) { return v != kNone; }));
      std::vector<std::size_t> best_assign;
      for (std::size_t i = 0; i < assign.size(); ++i) {
        for (std::size_t option = 0; option <= candidates.size(); ++option) {
          const std::size_t value = option == candidates.size() ? kNone : option;
          if (value == assign[i]) continue;
          if (assign[i] == kNone && used >= max_size) continue;
          auto trial = assign;
          trial[i] = value;
          const Perturbation p = to_perturbation(trial);
          const double r = rollout(p);
          if (r < best_return) {
            best_return = r;
            best = p;
            best_assign = trial;
          }
        }
      }
      if (best_assign.empty()) break;
      assign = std::move(best_assign);
    }
  }

  GreedySearchResult result;
  result.perturbed = apply_perturbation(msgs, best, candidates);
  result.victim_return = best_return;
  result.exhaustive = exhaustive;
  result.evaluated = rollout.evaluated;
  return result;
}

MessageSet GreedyAdaptiveAttacker::attack(const AttackContext& ctx, const MessageSet& benign,
                                          const AttackBudget& budget, Rng& rng) const {
  if (ctx.env == nullptr || ctx.victim == nullptr) {
    throw InvalidRange("greedy attacker needs an environment model and the victim policy");
  }
  GreedySearchOptions opts = options_;
  opts.allowed_channels.assign(ctx.channels.begin(), ctx.channels.end());
  return greedy_adaptive_attack(*ctx.env, *ctx.victim, benign, budget, candidates_, opts, rng,
                                ctx.victim_seed)
      .perturbed;
}

// ---------------------------------------------------------------------------

ThreatHarness::ThreatHarness(std::unique_ptr<Attacker> attacker, AttackBudget budget)
    : attacker_(std::move(attacker)), budget_(budget) {
  if (!attacker_) throw InvalidRange("threat harness needs an attacker");
}

void ThreatHarness::begin_episode(std::size_t n_channels, Rng& rng) {
  budget_.validate(n_channels);
  n_channels_ = n_channels;
  fixed_.clear();
  if (pinned_) {
    for (std::size_t c : *pinned_) {
      if (c >= n_channels) throw InvalidRange("pinned channel out of range");
    }
    fixed_ = *pinned_;
  } else if (budget_.channel_policy == ChannelPolicy::fixed_set) {
    fixed_ = choose_channels(n_channels, budget_.max_corrupted, rng);
  }
}

void ThreatHarness::pin_channels(std::vector<std::size_t> channels) {
  if (channels.size() > budget_.max_corrupted) throw InvalidRange("more pinned channels than the budget");
  std::sort(channels.begin(), channels.end());
  if (std::adjacent_find(channels.begin(), channels.end()) != channels.end()) {
    throw InvalidRange("pinned channels must be distinct");
  }
  pinned_ = std::move(channels);
}

MessageSet ThreatHarness::apply(const MessageSet& benign, const Environment* env,
                                const EnsemblePolicy* victim, std::uint64_t victim_seed,
                                Rng& rng) {
  if (benign.size() != n_channels_) throw InvalidRange("harness not started for this channel count");
  std::vector<std::size_t> channels;
  if (pinned_ || budget_.channel_policy == ChannelPolicy::fixed_set) {
    channels = fixed_;
  } else if (attacker_->chooses_channels()) {
    channels.resize(n_channels_);
    std::iota(channels.begin(), channels.end(), std::size_t{0});
  } else {
    channels = choose_channels(n_channels_, budget_.max_corrupted, rng);
  }
  AttackContext ctx;
  ctx.channels = channels;
  ctx.env = env;
  ctx.victim = victim;
  ctx.victim_seed = victim_seed;
  // Adaptive attackers get every allowed channel here and enforce the
  // budget inside their search.
  MessageSet out = attacker_->attack(ctx, benign, budget_, rng);
  if (out.tampered_count() > budget_.max_corrupted) {
    throw std::logic_error("attacker exceeded its budget");
  }
  return out;
}

}  // namespace ame
