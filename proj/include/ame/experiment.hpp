#pragma once

// Builds environments, policies and attackers from an ExperimentConfig and
// runs seeded episode batches.

#include <cstddef>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "ame/certify.hpp"
#include "ame/config.hpp"

namespace ame {

std::unique_ptr<Environment> make_environment(const ExperimentConfig& config);
std::unique_ptr<AblationPolicy> make_policy(const ExperimentConfig& config);
/// Null for AttackKind::none.
std::unique_ptr<Attacker> make_attacker(const ExperimentConfig& config, const Environment& env);
AttackBudget make_budget(const ExperimentConfig& config);
EnsembleConfig make_ensemble_config(const ExperimentConfig& config, ActionKind kind);

/// Grid of candidate payloads over a box domain (or the alphabet itself).
std::vector<Payload> candidate_payloads(const PayloadDomain& domain, std::size_t per_axis);

/// fn(i) for i in [0, n), results in index order whatever the thread count.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn,
                            std::size_t threads = 0) {
  std::vector<T> out(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct EpisodeOutcome {
  Trajectory trajectory;
  std::vector<CertificateReport> reports;
  double discounted_return = 0.0;
  std::size_t certified_steps = 0;
};

/// Episode `index` of the configured batch, clean or under the configured attack.
EpisodeOutcome run_configured_episode(const ExperimentConfig& config, std::size_t index,
                                      bool attacked, bool with_reports = true);

struct BatchStats {
  std::vector<double> returns;
  double mean = 0.0;
  double stddev = 0.0;
  /// Certified steps over all steps.
  double certified_fraction = 0.0;
};

BatchStats run_batch(const ExperimentConfig& config, bool attacked, bool with_reports = true);

BatchStats summarize(std::vector<double> returns, std::size_t certified, std::size_t steps);

}  // namespace ame
