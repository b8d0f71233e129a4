#include "ame/experiment.hpp"

#include <cmath>
#include <numeric>

#include "ame/errors.hpp"

namespace ame {

std::unique_ptr<Environment> make_environment(const ExperimentConfig& config) {
  if (config.environment == EnvKind::grid_food) return std::make_unique<GridFoodEnv>(config.grid);
  return std::make_unique<DemandShareEnv>(config.demand);
}

std::unique_ptr<AblationPolicy> make_policy(const ExperimentConfig& config) {
  if (config.environment == EnvKind::grid_food) {
    return std::make_unique<GridFoodPolicy>(config.grid_aggregate);
  }
  const DemandShareEnv env(config.demand);
  return std::make_unique<DemandSharePolicy>(config.demand.n_products, env.max_restock());
}

std::vector<Payload> candidate_payloads(const PayloadDomain& domain, std::size_t per_axis) {
  if (domain.is_finite()) return domain.alphabet;
  if (per_axis < 1) throw InvalidRange("candidate grid needs at least one value per axis");
  const std::size_t L = domain.lo.size();
  std::vector<Payload> out;
  std::vector<std::size_t> idx(L, 0);
  while (true) {
    Payload p(L);
    for (std::size_t l = 0; l < L; ++l) {
      p[l] = per_axis == 1 ? 0.5 * (domain.lo[l] + domain.hi[l])
                           : domain.lo[l] + (domain.hi[l] - domain.lo[l]) * double(idx[l]) /
                                                double(per_axis - 1);
    }
    out.push_back(std::move(p));
    std::size_t l = 0;
    while (l < L && ++idx[l] == per_axis) idx[l++] = 0;
    if (l == L) break;
  }
  return out;
}

std::unique_ptr<Attacker> make_attacker(const ExperimentConfig& config, const Environment& env) {
  switch (config.attacker) {
    case AttackKind::none:
      return nullptr;
    case AttackKind::random:
      return std::make_unique<RandomAttacker>(env.payload_domain());
    case AttackKind::extreme:
      return std::make_unique<ExtremeAttacker>(env.payload_domain());
    case AttackKind::offset:
      return std::make_unique<OffsetAttacker>(config.offset);
    case AttackKind::perm:
      return std::make_unique<DemandAttacker>(DemandTransform::perm);
    case AttackKind::swap:
      return std::make_unique<DemandAttacker>(DemandTransform::swap);
    case AttackKind::flip:
      return std::make_unique<DemandAttacker>(DemandTransform::flip);
    case AttackKind::greedy: {
      GreedySearchOptions opt;
      opt.horizon = config.search_horizon;
      opt.seed_mode = config.seed_mode;
      return std::make_unique<GreedyAdaptiveAttacker>(
          candidate_payloads(env.payload_domain(), config.candidate_grid), opt);
    }
  }
  throw ConfigError("unhandled attacker kind");
}

AttackBudget make_budget(const ExperimentConfig& config) {
  return AttackBudget{config.n_adversaries, config.channel_policy, config.stress};
}

EnsembleConfig make_ensemble_config(const ExperimentConfig& config, ActionKind kind) {
  return EnsembleConfig(config.n_agents(), config.n_adversaries, config.ablation_size,
                        config.sample_size, kind);
}

EpisodeOutcome run_configured_episode(const ExperimentConfig& config, std::size_t index,
                                      bool attacked, bool with_reports) {
  auto env = make_environment(config);
  auto policy = make_policy(config);
  const EnsemblePolicy victim(*policy, config.ablation_size, config.sample_size);
  std::unique_ptr<ThreatHarness> threat;
  if (attacked) {
    if (auto attacker = make_attacker(config, *env)) {
      threat = std::make_unique<ThreatHarness>(std::move(attacker), make_budget(config));
    }
  }
  EpisodeOutcome out;
  out.trajectory = run_episode(*env, victim, threat.get(), config.seeds.for_episode(index), config.gamma);
  out.discounted_return = out.trajectory.discounted_return();
  if (with_reports) {
    out.reports = certify_trajectory(*policy, make_ensemble_config(config, policy->action_kind()),
                                     out.trajectory);
    for (const auto& r : out.reports) {
      if (r.verdict == Verdict::certified_benign) ++out.certified_steps;
    }
  }
  return out;
}

BatchStats summarize(std::vector<double> returns, std::size_t certified, std::size_t steps) {
  BatchStats s;
  s.returns = std::move(returns);
  const double n = static_cast<double>(s.returns.size());
  if (n > 0) s.mean = std::accumulate(s.returns.begin(), s.returns.end(), 0.0) / n;
  if (n > 1) {
    double sq = 0.0;
    for (double r : s.returns) sq += (r - s.mean) * (r - s.mean);
    s.stddev = std::sqrt(sq / (n - 1));
  }
  s.certified_fraction = steps ? static_cast<double>(certified) / static_cast<double>(steps) : 0.0;
  return s;
}

BatchStats run_batch(const ExperimentConfig& config, bool attacked, bool with_reports) {
  struct Slim {
    double ret = 0.0;
    std::size_t certified = 0;
    std::size_t steps = 0;
  };
  const auto slims = parallel_map<Slim>(config.episodes, [&](std::size_t i) {
    const auto o = run_configured_episode(config, i, attacked, with_reports);
    return Slim{o.discounted_return, o.certified_steps, o.trajectory.steps.size()};
  });
  std::vector<double> returns;
  std::size_t certified = 0, steps = 0;
  for (const auto& s : slims) {
    returns.push_back(s.ret);
    certified += s.certified;
    steps += s.steps;
  }
  return summarize(std::move(returns), certified, steps);
}

}  // namespace ame
