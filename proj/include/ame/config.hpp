#pragma once

// Experiment configuration: everything a run depends on, round-trippable
// through JSON so a run can be reproduced from its config file alone.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ame/demand_share.hpp"
#include "ame/episode.hpp"
#include "ame/grid_food.hpp"
#include "ame/threat.hpp"

namespace ame {

enum class EnvKind { grid_food, demand_share };
enum class AttackKind { none, random, extreme, offset, perm, swap, flip, greedy };
enum class SweepVar { k, D, C };

struct ExperimentConfig {
  EnvKind environment = EnvKind::grid_food;
  GridFoodParams grid;
  ReportAggregate grid_aggregate = ReportAggregate::median;
  DemandShareParams demand;

  std::size_t n_adversaries = 2;
  std::size_t ablation_size = 2;
  std::optional<std::uint64_t> sample_size;

  AttackKind attacker = AttackKind::random;
  ChannelPolicy channel_policy = ChannelPolicy::per_step_reselect;
  bool stress = false;
  std::vector<double> offset;
  SeedMode seed_mode = SeedMode::blind;
  std::size_t search_horizon = 1;
  /// Greedy candidates: this many grid values per payload coordinate.
  std::size_t candidate_grid = 3;

  std::size_t episodes = 20;
  EpisodeSeeds seeds{1, 2, 3};
  double gamma = kDefaultGamma;
  std::string out_dir = "out";

  SweepVar sweep_var = SweepVar::k;
  std::vector<std::uint64_t> sweep_values;

  std::size_t n_agents() const;
  std::size_t n_channels() const { return n_agents() - 1; }

  /// Throws ConfigError on anything the modules would reject later.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Starts from `base` and overwrites the keys present in `j`. Unknown keys
/// and wrongly typed values throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

const char* to_string(EnvKind v);
const char* to_string(AttackKind v);
const char* to_string(SweepVar v);
EnvKind parse_env_kind(const std::string& s);
AttackKind parse_attack_kind(const std::string& s);
SweepVar parse_sweep_var(const std::string& s);

}  // namespace ame
