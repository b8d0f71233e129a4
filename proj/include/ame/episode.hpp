#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ame/ensemble.hpp"
#include "ame/environment.hpp"
#include "ame/threat.hpp"

namespace ame {

inline constexpr double kDefaultGamma = 0.99;

/// The three named seeds every run is derived from.
struct EpisodeSeeds {
  std::uint64_t env = 0;
  std::uint64_t attack = 0;
  std::uint64_t ensemble = 0;

  /// Seeds for episode `index` of a batch.
  EpisodeSeeds for_episode(std::uint64_t index) const;
};

struct StepRecord {
  History history;
  MessageSet benign;
  MessageSet received;
  EnsembleDecision decision;
  std::uint64_t ensemble_seed = 0;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  double gamma = kDefaultGamma;

  double discounted_return() const { return discounted_return(gamma); }
  double discounted_return(double g) const;
  double total_reward() const;
};

using StepObserver = std::function<void(const StepRecord&)>;

/// Resets `env` with seeds.env and runs observe -> receive -> (attack) -> act
/// until the episode ends. `threat` may be null for a clean run.
Trajectory run_episode(Environment& env, const EnsemblePolicy& victim, ThreatHarness* threat,
                       const EpisodeSeeds& seeds, double gamma = kDefaultGamma,
                       const StepObserver& observer = {});

}  // namespace ame
