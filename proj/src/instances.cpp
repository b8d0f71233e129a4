#include "ame/instances.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ame/errors.hpp"

namespace ame {

namespace {

std::size_t symbol_of(const Payload& p, std::size_t n_symbols) {
  if (p.size() != 1) throw DimensionMismatch("symbolic payloads hold one value");
  const double v = p[0];
  if (v < 0 || v != std::floor(v) || v >= static_cast<double>(n_symbols)) {
    throw InvalidRange("payload is not a symbol of the alphabet");
  }
  return static_cast<std::size_t>(v);
}

std::vector<Payload> symbols(std::initializer_list<std::size_t> ids) {
  std::vector<Payload> out;
  for (std::size_t s : ids) out.push_back(symbol_payload(s));
  return out;
}

std::vector<Payload> scalars(std::initializer_list<double> vs) {
  std::vector<Payload> out;
  for (double v : vs) out.push_back({v});
  return out;
}

OracleInstance make(std::string name, std::shared_ptr<const AblationPolicy> policy,
                    std::vector<Payload> benign, std::size_t C, std::size_t k,
                    std::vector<Payload> alphabet) {
  const std::size_t N = benign.size() + 1;
  const ActionKind kind = policy->action_kind();
  return OracleInstance{std::move(name),
                        std::move(policy),
                        History{0, {}},
                        MessageSet::from_payloads(std::move(benign)),
                        EnsembleConfig(N, C, k, std::nullopt, kind),
                        std::move(alphabet),
                        {},
                        true};
}

}  // namespace

std::shared_ptr<const AblationPolicy> plurality_policy(std::size_t n_symbols) {
  return std::make_shared<FunctionPolicy>(
      ActionKind::discrete, n_symbols, [n_symbols](const History&, const KSampleView& s) {
        std::vector<std::size_t> count(n_symbols, 0);
        for (std::size_t i = 0; i < s.size(); ++i) ++count[symbol_of(s.payload(i), n_symbols)];
        const auto it = std::max_element(count.begin(), count.end());
        return Action::discrete(static_cast<std::size_t>(it - count.begin()));
      });
}

std::shared_ptr<const AblationPolicy> sum_mod_policy(std::size_t n_symbols) {
  return std::make_shared<FunctionPolicy>(
      ActionKind::discrete, n_symbols, [n_symbols](const History&, const KSampleView& s) {
        std::size_t sum = 0;
        for (std::size_t i = 0; i < s.size(); ++i) sum += symbol_of(s.payload(i), n_symbols);
        return Action::discrete(sum % n_symbols);
      });
}

std::shared_ptr<const AblationPolicy> mean_policy(std::size_t dim) {
  return std::make_shared<FunctionPolicy>(
      ActionKind::continuous, dim, [dim](const History&, const KSampleView& s) {
        std::vector<double> out(dim, 0.0);
        std::vector<double> col(s.size());
        for (std::size_t l = 0; l < dim; ++l) {
          for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.payload(i).size() != dim) throw DimensionMismatch("payload dimension");
            col[i] = s.payload(i)[l];
          }
          std::sort(col.begin(), col.end());
          for (double v : col) out[l] += v;
          out[l] /= static_cast<double>(s.size());
        }
        return Action::continuous(std::move(out));
      });
}

OracleInstance default_discrete_instance() {
  return make("default-N6-C1-k2", plurality_policy(3), symbols({0, 0, 1, 0, 2}), 1, 2,
              symbols({0, 1, 2}));
}

std::vector<OracleInstance> shipped_discrete_instances() {
  std::vector<OracleInstance> out;
  out.push_back(default_discrete_instance());
  out.push_back(make("summod-N6-C1-k2", sum_mod_policy(3), symbols({0, 0, 0, 0, 0}), 1, 2,
                     symbols({0, 1, 2})));
  out.push_back(make("plurality-N8-C2-k2", plurality_policy(4), symbols({1, 1, 1, 1, 2, 1, 3}), 2,
                     2, symbols({0, 1, 2, 3})));
  out.push_back(make("plurality-N8-C2-k1", plurality_policy(4), symbols({0, 0, 0, 1, 0, 0, 2}), 2,
                     1, symbols({0, 1, 2, 3})));
  out.push_back(make("summod-N7-C2-k1", sum_mod_policy(4), symbols({3, 3, 3, 3, 1, 3}), 2, 1,
                     symbols({0, 1, 2, 3})));
  out.push_back(make("summod-N8-C1-k3", sum_mod_policy(4), symbols({2, 2, 2, 2, 2, 2, 2}), 1, 3,
                     symbols({0, 1, 2, 3})));
  return out;
}

std::vector<OracleInstance> shipped_continuous_instances() {
  std::vector<OracleInstance> out;
  out.push_back(make("mean1-N6-C1-k2", mean_policy(1), scalars({0.0, 0.2, 0.4, 0.6, 0.8}), 1, 2,
                     scalars({-10.0, -1.0, 0.5, 10.0})));
  out.push_back(make("mean1-N7-C1-k2", mean_policy(1), scalars({1.0, 1.0, 2.0, 3.0, 5.0, 8.0}), 1,
                     2, scalars({-100.0, 0.0, 4.0, 100.0})));
  out.push_back(make("mean2-N8-C1-k2", mean_policy(2),
                     {{0.0, 1.0}, {0.5, 0.5}, {1.0, 0.0}, {0.2, 0.8}, {0.9, 0.1}, {0.4, 0.4},
                      {0.6, 0.7}},
                     1, 2, {{-5.0, -5.0}, {5.0, 5.0}, {-5.0, 5.0}, {0.5, 0.5}}));
  out.push_back(make("mean1-N8-C2-k1", mean_policy(1),
                     scalars({0.0, 0.3, 0.1, 0.7, 0.2, 0.9, 0.4}), 2, 1,
                     scalars({-3.0, 0.5, 3.0})));
  out.push_back(make("mean2-N8-C2-k1", mean_policy(2),
                     {{3.0, 3.0}, {3.0, 4.0}, {4.0, 3.0}, {2.0, 2.0}, {5.0, 1.0}, {1.0, 5.0},
                      {3.5, 3.5}},
                     2, 1, {{-9.0, -9.0}, {9.0, 9.0}, {-9.0, 9.0}, {9.0, -9.0}}));
  return out;
}

OracleInstance broken_instance() {
  auto inst = make("broken-N6-C1-k4", mean_policy(1), scalars({0.0, 0.1, 0.2, 0.3, 0.4}), 1, 4,
                   scalars({10.0}));
  inst.options.require_condition = false;
  inst.expect_sound = false;
  return inst;
}

std::vector<PartialCheck> run_partial_checks(std::uint64_t seeds, std::uint64_t base_seed) {
  std::vector<PartialCheck> out;
  auto check = [&](std::string name, const AblationPolicy& policy, const MessageSet& benign,
                   const MessageSet& attacked, const EnsembleConfig& cfg,
                   std::optional<std::uint64_t> u) {
    PartialCheck c;
    c.name = std::move(name);
    c.estimate = estimate_partial_certification(policy, History{}, benign, attacked, cfg, seeds,
                                                derive_seed(base_seed, out.size()), u);
    const double se = c.estimate.standard_error();
    const double p = c.estimate.predicted;
    c.passed = std::abs(c.estimate.event_rate() - p) <= 3.0 * se + 1e-12 &&
               c.estimate.benign_rate() >= p - 3.0 * se - 1e-12;
    out.push_back(std::move(c));
  };

  // Continuous: one channel pushed far out, D-median over pair means.
  {
    auto policy = mean_policy(1);
    const auto benign = MessageSet::from_payloads(scalars({0.0, 0.2, 0.4, 0.6, 0.8}));
    const auto attacked = benign.with_payload(2, {50.0});
    for (std::uint64_t D : {1, 3, 5, 7}) {
      check("continuous-N6-C1-k2-D" + std::to_string(D), *policy, benign, attacked,
            EnsembleConfig(6, 1, 2, D, ActionKind::continuous), std::nullopt);
    }
  }
  // Discrete: two channels flipped to a rival symbol.
  {
    auto policy = plurality_policy(3);
    const auto benign = MessageSet::from_payloads(symbols({0, 0, 0, 0, 0, 0, 0, 0}));
    const auto attacked = benign.with_payload(1, symbol_payload(2)).with_payload(5, symbol_payload(2));
    for (std::uint64_t D : {2, 5, 9}) {
      for (std::uint64_t u : std::set<std::uint64_t>{1, 2, D}) {
        check("discrete-N9-C2-k2-D" + std::to_string(D) + "-u" + std::to_string(u), *policy,
              benign, attacked, EnsembleConfig(9, 2, 2, D, ActionKind::discrete), u);
      }
    }
  }
  return out;
}

DetectionRun run_detection(const ExperimentConfig& config, std::size_t window) {
  if (window < 1) throw InvalidRange("detection window must be at least one episode");
  auto env = make_environment(config);
  auto policy = make_policy(config);
  const EnsemblePolicy victim(*policy, config.ablation_size, config.sample_size);
  DetectionRun run;
  Rng pick(config.seeds.attack);
  if (config.attacker != AttackKind::none) {
    run.attacked_channels = choose_channels(env->n_channels(), config.n_adversaries, pick);
  }
  BiasAccumulator acc(env->n_channels());
  for (std::size_t e = 0; e < window; ++e) {
    std::unique_ptr<ThreatHarness> threat;
    if (auto attacker = make_attacker(config, *env)) {
      threat = std::make_unique<ThreatHarness>(std::move(attacker), make_budget(config));
      threat->pin_channels(run.attacked_channels);
    }
    run_episode(*env, victim, threat.get(), config.seeds.for_episode(e), config.gamma,
                [&](const StepRecord& s) { acc.add_step(action_bias(*policy, s.history, s.received)); });
    acc.end_episode();
  }
  run.scores = acc.average();
  return run;
}

RewardCheck check_discrete_reward_certificate(const ExperimentConfig& config) {
  if (config.sample_size) throw ConfigError("reward check runs the full ensemble");
  auto policy = make_policy(config);
  if (policy->action_kind() != ActionKind::discrete) {
    throw ConfigError("discrete reward check needs a discrete environment");
  }
  struct One {
    bool pre = false;
    double margin = 0.0;
  };
  const auto results = parallel_map<One>(config.episodes, [&](std::size_t i) {
    auto env = make_environment(config);
    env->reset(config.seeds.for_episode(i).env);
    const double floor = exact_min_clean_return(*env, *policy, config.ablation_size, config.gamma);
    const EpisodeOutcome o = run_configured_episode(config, i, true, true);
    return One{all_certified(o.reports), o.discounted_return - floor};
  });
  RewardCheck check;
  check.episodes = results.size();
  for (const auto& r : results) {
    if (!r.pre) continue;
    ++check.preconditioned;
    check.worst_margin = std::min(check.worst_margin, r.margin);
    if (r.margin < -1e-9) ++check.violations;
  }
  return check;
}

RewardCheck check_continuous_reward_certificate(const ExperimentConfig& config,
                                                std::uint64_t clean_streams,
                                                std::size_t grid_points) {
  if (config.sample_size) throw ConfigError("reward check runs the full ensemble");
  auto policy = make_policy(config);
  if (policy->action_kind() != ActionKind::continuous) {
    throw ConfigError("continuous reward check needs a continuous environment");
  }
  struct One {
    bool pre = false;
    double margin = 0.0;
    double margin_reward_only = 0.0;
    double eps_R = 0.0, eps_P = 0.0;
  };
  const auto results = parallel_map<One>(config.episodes, [&](std::size_t i) {
    const EpisodeSeeds seeds = config.seeds.for_episode(i);
    auto env = make_environment(config);
    env->reset(seeds.env);
    const auto clean = clean_ablation_returns(*env, *policy, config.ablation_size, clean_streams,
                                              derive_seed(seeds.ensemble, 0x5eed), config.gamma);
    double v_clean = 0.0;
    for (double r : clean) v_clean += r;
    v_clean /= static_cast<double>(clean.size());

    const EpisodeOutcome o = run_configured_episode(config, i, true, true);
    // Replay the attacked actions to recover the visited states.
    std::vector<std::unique_ptr<Environment>> snapshots;
    for (const auto& step : o.trajectory.steps) {
      snapshots.push_back(env->clone());
      env->step(step.decision.action);
    }
    std::vector<const Environment*> states;
    for (const auto& s : snapshots) states.push_back(s.get());
    const DiscrepancyEstimate est =
        estimate_discrepancy(states, *policy, config.ablation_size, config.gamma, grid_points);
    DiscrepancyEstimate reward_only = est;
    reward_only.eps_P = 0.0;
    return One{all_certified(o.reports), o.discounted_return - reward_bound_continuous(est, v_clean),
               o.discounted_return - reward_bound_continuous(reward_only, v_clean), est.eps_R,
               est.eps_P};
  });
  RewardCheck check;
  check.episodes = results.size();
  for (const auto& r : results) {
    check.max_eps_R = std::max(check.max_eps_R, r.eps_R);
    check.max_eps_P = std::max(check.max_eps_P, r.eps_P);
    if (!r.pre) continue;
    ++check.preconditioned;
    check.worst_margin = std::min(check.worst_margin, r.margin);
    if (r.margin < -1e-9) ++check.violations;
    if (r.margin_reward_only >= -1e-9) ++check.reward_term_only_holds;
  }
  return check;
}

}  // namespace ame
