#include "ame/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "ame/errors.hpp"

namespace ame {
namespace {

void check_channel_count(const EnsembleConfig& config, const MessageSet& msgs) {
  if (msgs.size() != config.n_channels()) {
    throw InvalidRange("message set size does not match N-1");
  }
}

bool is_partial(const EnsembleConfig& config) {
  return config.is_partial() && BigInt(config.sample_size()) < config.n1();
}

bool condition_for(const EnsembleConfig& config, const EnsembleDecision& decision) {
  const ConditionCheck c = check_conditions(config, decision.top_votes());
  return config.action_kind() == ActionKind::discrete ? c.condition1 : c.condition2;
}

}  // namespace

bool BenignActionSet::contains(const Action& a) const {
  if (kind == ActionKind::discrete) return a.is_discrete() && actions.count(a.id()) > 0;
  if (a.is_discrete() || a.vec().size() != lo.size()) return false;
  return outside_coordinates(a).empty();
}

std::vector<std::size_t> BenignActionSet::outside_coordinates(const Action& a) const {
  if (kind != ActionKind::continuous) throw InvalidRange("envelope check on a discrete set");
  const auto& v = a.vec();
  if (v.size() != lo.size()) throw DimensionMismatch("action dimension differs from envelope");
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (!(v[l] >= lo[l] && v[l] <= hi[l])) out.push_back(l);
  }
  return out;
}

BenignActionSet benign_action_set(const AblationPolicy& policy, const History& history,
                                  const MessageSet& benign_msgs, std::size_t k) {
  const auto combos = enumerate_combinations(benign_msgs.size(), k);
  const auto actions = evaluate_base_actions(policy, history, benign_msgs, combos);
  BenignActionSet set;
  set.kind = policy.action_kind();
  if (set.kind == ActionKind::discrete) {
    for (const auto& a : actions) set.actions.insert(a.id());
    return set;
  }
  set.lo = actions.front().vec();
  set.hi = set.lo;
  for (const auto& a : actions) {
    const auto& v = a.vec();
    if (v.size() != set.lo.size()) throw DimensionMismatch("base actions differ in dimension");
    for (std::size_t l = 0; l < v.size(); ++l) {
      set.lo[l] = std::min(set.lo[l], v[l]);
      set.hi[l] = std::max(set.hi[l], v[l]);
    }
  }
  return set;
}

std::vector<Action> benign_actions(const BenignActionSet& set) {
  if (set.kind != ActionKind::discrete) throw InvalidRange("continuous benign sets are intervals");
  std::vector<Action> out;
  for (std::size_t id : set.actions) out.push_back(Action::discrete(id));
  return out;
}

ConditionCheck check_conditions(const EnsembleConfig& config, std::optional<std::uint64_t> u_max) {
  ConditionCheck c;
  c.condition2 = dominating_benign_holds(config.n_agents(), config.n_adversaries(),
                                         config.ablation_size());
  c.condition1 = u_max.has_value() && BigInt(*u_max) > config.u_adv();
  return c;
}

ConditionCheck check_conditions(const EnsembleConfig& config, const VoteTable& votes) {
  std::uint64_t top = 0;
  for (const auto& [id, n] : votes) top = std::max(top, n);
  return check_conditions(config, top);
}

const char* to_string(Verdict v) {
  return v == Verdict::certified_benign ? "certified" : "uncertified";
}

CertificateReport certify_step(const AblationPolicy& policy, const EnsembleConfig& config,
                               std::size_t step, const History& history, const MessageSet& benign,
                               const EnsembleDecision& decision) {
  check_channel_count(config, benign);
  CertificateReport r;
  r.step = step;
  r.u_max = decision.top_votes();
  r.u_adv = config.u_adv();
  const ConditionCheck c = check_conditions(config, r.u_max);
  r.condition1 = c.condition1;
  r.condition2 = c.condition2;
  r.benign_set = benign_action_set(policy, history, benign, config.ablation_size());
  r.chosen_action = decision.action;
  r.in_benign_set = r.benign_set.contains(decision.action);

  const std::size_t N = config.n_agents(), C = config.n_adversaries(), k = config.ablation_size();
  if (config.action_kind() == ActionKind::discrete) {
    r.verdict = r.condition1 ? Verdict::certified_benign : Verdict::uncertified;
    r.certified_probability =
        is_partial(config) ? partial_sample_prob_discrete(N, C, k, config.sample_size(), r.u_max)
                           : (r.condition1 ? 1.0 : 0.0);
  } else if (is_partial(config)) {
    r.verdict = Verdict::uncertified;
    r.certified_probability =
        r.condition2 ? partial_sample_prob_continuous(N, C, k, config.sample_size()) : 0.0;
  } else {
    r.verdict = r.condition2 ? Verdict::certified_benign : Verdict::uncertified;
    r.certified_probability = r.condition2 ? 1.0 : 0.0;
  }
  return r;
}

std::vector<CertificateReport> certify_trajectory(const AblationPolicy& policy,
                                                  const EnsembleConfig& config,
                                                  const Trajectory& trajectory) {
  std::vector<CertificateReport> out;
  out.reserve(trajectory.steps.size());
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const auto& s = trajectory.steps[t];
    out.push_back(certify_step(policy, config, t, s.history, s.benign, s.decision));
  }
  return out;
}

bool all_certified(std::span<const CertificateReport> reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const auto& r) { return r.verdict == Verdict::certified_benign; });
}

void write_certificate_csv(std::ostream& out, std::span<const CertificateReport> reports) {
  out << "step,u_max,u_adv,cond1,cond2,verdict\n";
  for (const auto& r : reports) {
    out << r.step << ',' << r.u_max << ',' << r.u_adv << ',' << int(r.condition1) << ','
        << int(r.condition2) << ',' << to_string(r.verdict) << '\n';
  }
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory,
                      std::span<const CertificateReport> reports) {
  out << "step,action,reward,tamper_mask,verdict\n";
  char buf[32];
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const auto& s = trajectory.steps[t];
    std::string mask;
    for (bool b : s.received.tamper_mask) mask += b ? '1' : '0';
    std::snprintf(buf, sizeof buf, "%.10g", s.reward);
    out << t << ',' << s.decision.action.to_string() << ',' << buf << ','
        << (mask.empty() ? "-" : mask) << ','
        << (t < reports.size() ? to_string(reports[t].verdict) : "na") << '\n';
  }
}

// ---------------------------------------------------------------------------

std::uint64_t oracle_search_size(std::size_t n_channels, std::size_t C, std::size_t alphabet_size,
                                 bool include_benign_choice) {
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max() / 4;
  const std::uint64_t choices = alphabet_size + (include_benign_choice ? 1 : 0);
  std::uint64_t total = small_binomial(n_channels, C);
  for (std::size_t i = 0; i < C; ++i) {
    if (choices != 0 && total > cap / choices) return cap;
    total *= choices;
  }
  return total;
}

OracleReport oracle_verify_action_certificate(const AblationPolicy& policy, const History& history,
                                              const MessageSet& benign_msgs,
                                              const EnsembleConfig& config,
                                              std::span<const Payload> alphabet,
                                              const OracleOptions& options) {
  check_channel_count(config, benign_msgs);
  if (config.action_kind() != policy.action_kind()) {
    throw InvalidRange("config and policy disagree on the action kind");
  }
  if (alphabet.empty()) throw InvalidRange("oracle needs a non-empty payload alphabet");
  const std::size_t n = benign_msgs.size();
  const std::size_t C = config.n_adversaries();
  const std::size_t k = config.ablation_size();
  const std::uint64_t total = oracle_search_size(n, C, alphabet.size(), options.include_benign_choice);
  if (total > options.budget) {
    throw BudgetExceeded("oracle enumeration of " + std::to_string(total) +
                         " perturbations exceeds the budget of " + std::to_string(options.budget));
  }

  OracleReport report;
  report.benign_set = benign_action_set(policy, history, benign_msgs, k);
  const std::size_t choices = alphabet.size() + (options.include_benign_choice ? 1 : 0);
  const auto subsets = enumerate_combinations(n, C);

  struct Partial {
    std::vector<OracleViolation> violations;
    std::uint64_t perturbations = 0;
    std::uint64_t held = 0;
  };
  auto run_subset = [&](const Combination& subset, Partial& acc) {
    std::vector<std::size_t> pick(C, 0);
    while (true) {
      MessageSet msgs = benign_msgs;
      for (std::size_t i = 0; i < C; ++i) {
        if (pick[i] < alphabet.size() && msgs.messages[subset[i]].payload != alphabet[pick[i]]) {
          msgs.messages[subset[i]].payload = alphabet[pick[i]];
          msgs.tamper_mask[subset[i]] = true;
        }
      }
      const EnsembleDecision d = ensemble_act(policy, history, msgs, k);
      const bool held = condition_for(config, d);
      ++acc.perturbations;
      if (held) ++acc.held;
      if ((held || !options.require_condition) && !report.benign_set.contains(d.action)) {
        OracleViolation v;
        v.channels = subset;
        for (std::size_t c : subset) v.payloads.push_back(msgs.payload(c));
        v.action = d.action;
        v.condition_held = held;
        acc.violations.push_back(std::move(v));
      }
      // Mixed-radix increment over the per-channel choices.
      std::size_t i = 0;
      while (i < C && ++pick[i] == choices) pick[i++] = 0;
      if (i == C) break;
    }
  };

  std::vector<Partial> parts(subsets.size());
  if (options.exec == Execution::parallel && subsets.size() > 1) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), subsets.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < subsets.size(); s += workers) run_subset(subsets[s], parts[s]);
      });
    }
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t s = 0; s < subsets.size(); ++s) run_subset(subsets[s], parts[s]);
  }
  for (auto& p : parts) {
    report.perturbations += p.perturbations;
    report.condition_held += p.held;
    for (auto& v : p.violations) report.violations.push_back(std::move(v));
  }
  return report;
}

double PartialSampleEstimate::standard_error() const {
  if (seeds == 0) return 0.0;
  return std::sqrt(predicted * (1.0 - predicted) / static_cast<double>(seeds));
}

PartialSampleEstimate estimate_partial_certification(
    const AblationPolicy& policy, const History& history, const MessageSet& benign,
    const MessageSet& attacked, const EnsembleConfig& config, std::uint64_t seeds,
    std::uint64_t base_seed, std::optional<std::uint64_t> u_threshold) {
  check_channel_count(config, benign);
  check_channel_count(config, attacked);
  if (attacked.tampered_count() > config.n_adversaries()) {
    throw InvalidRange("attacked set exceeds the adversary budget");
  }
  const std::size_t n = attacked.size();
  const std::size_t k = config.ablation_size();
  const std::uint64_t D = config.sample_size();
  const bool discrete = config.action_kind() == ActionKind::discrete;
  if (discrete && !u_threshold) throw InvalidRange("discrete estimate needs a vote threshold");

  PartialSampleEstimate est;
  est.seeds = seeds;
  est.predicted =
      discrete ? partial_sample_prob_discrete(config.n_agents(), config.n_adversaries(), k, D,
                                              *u_threshold)
               : partial_sample_prob_continuous(config.n_agents(), config.n_adversaries(), k, D);
  const BenignActionSet set = benign_action_set(policy, history, benign, k);
  // The probabilities count draws against the worst case of exactly C tainted
  // channels, so pad the mask up to C with the lowest untouched channels.
  std::vector<bool> tainted = attacked.tamper_mask;
  for (std::size_t c = 0, extra = config.n_adversaries() - attacked.tampered_count(); extra > 0; ++c) {
    if (!tainted[c]) {
      tainted[c] = true;
      --extra;
    }
  }

  for (std::uint64_t s = 0; s < seeds; ++s) {
    const std::uint64_t seed = derive_seed(base_seed, s);
    const auto combos = sample_combinations(n, k, D, seed);
    std::uint64_t bad = 0;
    for (const auto& c : combos) {
      if (std::any_of(c.begin(), c.end(), [&](std::size_t i) { return tainted[i]; })) ++bad;
    }
    const bool event = discrete ? bad < *u_threshold : 2 * (D - bad) > D;
    if (event) ++est.event_count;
    const auto actions = evaluate_base_actions(policy, history, attacked, combos);
    if (set.contains(aggregate(policy, actions).action)) ++est.benign_count;
  }
  return est;
}

// ---------------------------------------------------------------------------

double reward_lower_bound_discrete(std::span<const double> clean_returns) {
  if (clean_returns.empty()) throw InvalidRange("no clean returns supplied");
  return *std::min_element(clean_returns.begin(), clean_returns.end());
}

std::vector<double> clean_ablation_returns(const Environment& env, const AblationPolicy& policy,
                                           std::size_t k, std::uint64_t streams,
                                           std::uint64_t seed, double gamma) {
  const std::size_t n = env.n_channels();
  if (k < 1 || k > n) throw InvalidRange("ablation size outside [1, N-1]");
  const std::uint64_t n1 = small_binomial(n, k);
  std::vector<double> out;
  out.reserve(streams);
  for (std::uint64_t s = 0; s < streams; ++s) {
    auto e = env.clone();
    Rng rng(derive_seed(seed, s));
    double total = 0.0, w = 1.0;
    while (!e->done()) {
      const MessageSet benign = e->benign_messages();
      const Combination combo = unrank_combination(rng.uniform_index(n1), n, k);
      const Action a = policy.act(e->history(), KSampleView(benign, combo));
      total += w * e->step(a).reward;
      w *= gamma;
    }
    out.push_back(total);
  }
  return out;
}

namespace {

double min_return_from(const Environment& env, const AblationPolicy& policy, std::size_t k,
                       double gamma, std::uint64_t& nodes, std::uint64_t budget) {
  if (env.done()) return 0.0;
  if (++nodes > budget) throw BudgetExceeded("clean-return search exceeded its node budget");
  const auto set = benign_action_set(policy, env.history(), env.benign_messages(), k);
  double best = std::numeric_limits<double>::infinity();
  for (const Action& a : benign_actions(set)) {
    auto child = env.clone();
    const double r = child->step(a).reward;
    best = std::min(best, r + gamma * min_return_from(*child, policy, k, gamma, nodes, budget));
  }
  return best;
}

}  // namespace

double exact_min_clean_return(const Environment& env, const AblationPolicy& policy, std::size_t k,
                              double gamma, std::uint64_t node_budget) {
  if (policy.action_kind() != ActionKind::discrete) {
    throw InvalidRange("exact clean-return search needs a discrete policy");
  }
  std::uint64_t nodes = 0;
  return min_return_from(env, policy, k, gamma, nodes, node_budget);
}

double value_bound(double reward_bound, double gamma, std::size_t horizon) {
  if (gamma < 0.0 || gamma > 1.0) throw InvalidRange("discount must lie in [0, 1]");
  if (gamma == 1.0) return reward_bound * static_cast<double>(horizon);
  return reward_bound * (1.0 - std::pow(gamma, static_cast<double>(horizon))) / (1.0 - gamma);
}

namespace {

std::vector<Action> range_grid(const BenignActionSet& set, std::size_t grid_points) {
  if (set.kind == ActionKind::discrete) return benign_actions(set);
  const std::size_t L = set.lo.size();
  std::vector<std::vector<double>> axes(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (set.lo[l] == set.hi[l] || grid_points < 2) {
      axes[l] = {set.lo[l]};
      if (grid_points < 2 && set.lo[l] != set.hi[l]) axes[l].push_back(set.hi[l]);
      continue;
    }
    for (std::size_t g = 0; g < grid_points; ++g) {
      axes[l].push_back(g + 1 == grid_points
                            ? set.hi[l]
                            : set.lo[l] + (set.hi[l] - set.lo[l]) * double(g) / double(grid_points - 1));
    }
  }
  std::vector<Action> out;
  std::vector<std::size_t> idx(L, 0);
  while (true) {
    std::vector<double> v(L);
    for (std::size_t l = 0; l < L; ++l) v[l] = axes[l][idx[l]];
    out.push_back(Action::continuous(std::move(v)));
    std::size_t l = 0;
    while (l < L && ++idx[l] == axes[l].size()) idx[l++] = 0;
    if (l == L) break;
  }
  return out;
}

}  // namespace

DiscrepancyEstimate estimate_discrepancy(std::span<const Environment* const> states,
                                         const AblationPolicy& policy, std::size_t k, double gamma,
                                         std::size_t grid_points) {
  DiscrepancyEstimate est;
  est.gamma = gamma;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Environment& env = *states[i];
    est.V_max = std::max(est.V_max, value_bound(env.reward_bound(), gamma, env.horizon()));
    if (env.done()) continue;
    ++est.states;
    const auto set = benign_action_set(policy, env.history(), env.benign_messages(), k);
    const auto grid = range_grid(set, grid_points);
    std::size_t lo_i = 0, hi_i = 0;
    double lo_r = std::numeric_limits<double>::infinity();
    double hi_r = -std::numeric_limits<double>::infinity();
    std::vector<double> first_next;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      auto child = env.clone();
      const double r = child->step(grid[a]).reward;
      if (r < lo_r) lo_r = r, lo_i = a;
      if (r > hi_r) hi_r = r, hi_i = a;
      const auto next = child->state();
      // Deterministic transitions: distinct next states are disjoint point masses.
      if (a == 0) first_next = next;
      else if (next != first_next) est.eps_P = 2.0;
    }
    if (!est.witness_state || hi_r - lo_r > est.eps_R) {
      est.eps_R = hi_r - lo_r;
      est.witness_state = i;
      est.witness_actions = std::make_pair(grid[hi_i], grid[lo_i]);
    }
  }
  return est;
}

double reward_bound_continuous(const DiscrepancyEstimate& est, double v_clean) {
  if (est.gamma < 0.0 || est.gamma >= 1.0) throw InvalidRange("reward bound needs 0 <= gamma < 1");
  if (est.eps_R < 0.0 || est.eps_P < 0.0 || est.eps_P > 2.0) {
    throw InvalidRange("discrepancy estimate outside its valid range");
  }
  return v_clean - (est.eps_R + est.gamma * est.V_max * est.eps_P) / (1.0 - est.gamma);
}

}  // namespace ame
