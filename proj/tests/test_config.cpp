#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ame/config.hpp"
#include "ame/errors.hpp"
#include "ame/experiment.hpp"

using namespace ame;
using nlohmann::json;

TEST_CASE("defaults validate") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.n_agents() == 9);
  c.environment = EnvKind::demand_share;
  CHECK(c.n_agents() == 10);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("json round trip") {
  ExperimentConfig c;
  c.environment = EnvKind::demand_share;
  c.demand.n_agents = 12;
  c.demand.horizon = 20;
  c.n_adversaries = 3;
  c.ablation_size = 2;
  c.sample_size = 17;
  c.attacker = AttackKind::swap;
  c.channel_policy = ChannelPolicy::fixed_set;
  c.seed_mode = SeedMode::aware;
  c.episodes = 7;
  c.seeds = {11, 12, 13};
  c.gamma = 0.9;
  c.out_dir = "elsewhere";
  c.sweep_var = SweepVar::D;
  c.sweep_values = {1, 5, 55};
  const json j = to_json(c);
  const auto back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.sample_size == 17);
  CHECK(back.seeds.ensemble == 13);
  CHECK(back.attacker == AttackKind::swap);

  const auto path = std::filesystem::temp_directory_path() / "ame_config_roundtrip.json";
  std::ofstream(path) << j.dump(2);
  CHECK(to_json(load_config(path.string())) == j);
  std::filesystem::remove(path);
}

TEST_CASE("partial json overrides a base") {
  ExperimentConfig base;
  base.episodes = 99;
  const auto c = config_from_json(json::parse(R"({"ensemble": {"ablation_size": 1}, "attacker": {"name": "extreme"}})"), base);
  CHECK(c.ablation_size == 1);
  CHECK(c.attacker == AttackKind::extreme);
  CHECK(c.episodes == 99);
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"bogus": 1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"ensemble": {"ablation_size": "two"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"attacker": {"name": "nope"}})")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/ame.json"), ConfigError);

  ExperimentConfig c;
  c.ablation_size = 9;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.ablation_size = 2;
  c.n_adversaries = 4;  // 4 is not below (9-1)/2
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.stress = true;
  CHECK_NOTHROW(c.validate());
  c.stress = false;
  c.n_adversaries = 2;
  c.sample_size = 29;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.sample_size.reset();
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("enum names round trip") {
  for (auto k : {AttackKind::none, AttackKind::random, AttackKind::extreme, AttackKind::offset,
                 AttackKind::perm, AttackKind::swap, AttackKind::flip, AttackKind::greedy}) {
    CHECK(parse_attack_kind(to_string(k)) == k);
  }
  for (auto e : {EnvKind::grid_food, EnvKind::demand_share}) CHECK(parse_env_kind(to_string(e)) == e);
  for (auto s : {SweepVar::k, SweepVar::D, SweepVar::C}) CHECK(parse_sweep_var(to_string(s)) == s);
}

TEST_CASE("a config reproduces its run") {
  ExperimentConfig c;
  c.grid.noise = ReportNoise::bounded;
  c.sample_size = 10;
  c.episodes = 3;
  const auto again = config_from_json(to_json(c));
  const auto a = run_batch(c, true);
  const auto b = run_batch(again, true);
  CHECK(a.returns == b.returns);
}
