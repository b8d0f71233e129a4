#include "ame/episode.hpp"

#include <cmath>

#include "ame/certmath.hpp"
#include "ame/errors.hpp"

namespace ame {

EpisodeSeeds EpisodeSeeds::for_episode(std::uint64_t index) const {
  return EpisodeSeeds{derive_seed(env, index), derive_seed(attack, index),
                      derive_seed(ensemble, index)};
}

double Trajectory::discounted_return(double g) const {
  double total = 0.0;
  double w = 1.0;
  for (const auto& s : steps) {
    total += w * s.reward;
    w *= g;
  }
  return total;
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

Trajectory run_episode(Environment& env, const EnsemblePolicy& victim, ThreatHarness* threat,
                       const EpisodeSeeds& seeds, double gamma, const StepObserver& observer) {
  const std::size_t n = env.n_channels();
  if (victim.ablation_size() < 1 || victim.ablation_size() > n) {
    throw InvalidRange("ablation size does not fit the environment's channel count");
  }
  if (auto d = victim.sample_size()) {
    if (*d < 1 || BigInt(*d) > binomial(n, victim.ablation_size())) {
      throw InvalidRange("sample size exceeds the number of k-samples");
    }
  }
  if (gamma < 0.0 || gamma > 1.0) throw InvalidRange("discount must lie in [0, 1]");

  env.reset(seeds.env);
  Rng attack_rng(seeds.attack);
  if (threat) threat->begin_episode(n, attack_rng);

  Trajectory traj;
  traj.gamma = gamma;
  while (!env.done()) {
    StepRecord rec;
    rec.history = env.history();
    rec.benign = env.benign_messages();
    rec.ensemble_seed = derive_seed(seeds.ensemble, rec.history.step);
    rec.received = threat ? threat->apply(rec.benign, &env, &victim, rec.ensemble_seed, attack_rng)
                          : rec.benign;
    rec.decision = victim.act(rec.history, rec.received, rec.ensemble_seed);
    rec.reward = env.step(rec.decision.action).reward;
    if (observer) observer(rec);
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

}  // namespace ame
