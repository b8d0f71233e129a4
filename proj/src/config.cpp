#include "ame/config.hpp"

#include <fstream>
#include <set>

#include "ame/certmath.hpp"
#include "ame/errors.hpp"

namespace ame {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
E parse_enum(const std::string& s, const std::pair<const char*, E> (&table)[N], const char* what) {
  for (const auto& [name, v] : table) {
    if (s == name) return v;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <class E, std::size_t N>
const char* enum_name(E v, const std::pair<const char*, E> (&table)[N]) {
  for (const auto& [name, e] : table) {
    if (e == v) return name;
  }
  return "?";
}

const std::pair<const char*, EnvKind> kEnvs[] = {{"grid_food", EnvKind::grid_food},
                                                  {"demand_share", EnvKind::demand_share}};
const std::pair<const char*, AttackKind> kAttacks[] = {
    {"none", AttackKind::none},     {"random", AttackKind::random}, {"extreme", AttackKind::extreme},
    {"offset", AttackKind::offset}, {"perm", AttackKind::perm},     {"swap", AttackKind::swap},
    {"flip", AttackKind::flip},     {"greedy", AttackKind::greedy}};
const std::pair<const char*, SweepVar> kSweeps[] = {
    {"k", SweepVar::k}, {"D", SweepVar::D}, {"C", SweepVar::C}};
const std::pair<const char*, ReportNoise> kNoise[] = {{"none", ReportNoise::none},
                                                       {"bounded", ReportNoise::bounded}};
const std::pair<const char*, ReportAggregate> kAggregates[] = {
    {"median", ReportAggregate::median}, {"mean", ReportAggregate::mean}};
const std::pair<const char*, ChannelPolicy> kChannels[] = {
    {"fixed", ChannelPolicy::fixed_set}, {"per_step", ChannelPolicy::per_step_reselect}};
const std::pair<const char*, SeedMode> kSeedModes[] = {{"blind", SeedMode::blind},
                                                        {"aware", SeedMode::aware}};

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string("'") + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + section);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class E, std::size_t N>
void read_enum(const json& j, const char* key, E& out, const std::pair<const char*, E> (&table)[N]) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  out = parse_enum(j.at(key).get<std::string>(), table, key);
}

}  // namespace

const char* to_string(EnvKind v) { return enum_name(v, kEnvs); }
const char* to_string(AttackKind v) { return enum_name(v, kAttacks); }
const char* to_string(SweepVar v) { return enum_name(v, kSweeps); }
EnvKind parse_env_kind(const std::string& s) { return parse_enum(s, kEnvs, "environment"); }
AttackKind parse_attack_kind(const std::string& s) { return parse_enum(s, kAttacks, "attacker"); }
SweepVar parse_sweep_var(const std::string& s) { return parse_enum(s, kSweeps, "sweep variable"); }

std::size_t ExperimentConfig::n_agents() const {
  return environment == EnvKind::grid_food ? grid.n_agents : demand.n_agents;
}

void ExperimentConfig::validate() const {
  const std::size_t N = n_agents();
  try {
    if (N < 2) throw ConfigError("n_agents must be >= 2");
    if (N > kMaxEnumerableAgents) throw ConfigError("simulations support at most 64 agents");
    EnsembleConfig check(N, n_adversaries, ablation_size, sample_size);
    (void)check;
    AttackBudget{n_adversaries, channel_policy, stress}.validate(N - 1);
  } catch (const InvalidRange& e) {
    throw ConfigError(e.what());
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (search_horizon < 1) throw ConfigError("search_horizon must be >= 1");
  if (attacker == AttackKind::offset && offset.empty()) {
    throw ConfigError("offset attacker needs an 'offset' vector");
  }
  const bool demand_attack =
      attacker == AttackKind::perm || attacker == AttackKind::swap || attacker == AttackKind::flip;
  if (demand_attack && environment != EnvKind::demand_share) {
    throw ConfigError("perm/swap/flip attacks need the demand_share environment");
  }
}

json to_json(const ExperimentConfig& c) {
  json env;
  env["name"] = to_string(c.environment);
  if (c.environment == EnvKind::grid_food) {
    env["width"] = c.grid.width;
    env["height"] = c.grid.height;
    env["n_agents"] = c.grid.n_agents;
    env["horizon"] = c.grid.horizon;
    env["noise"] = enum_name(c.grid.noise, kNoise);
    env["noise_scale"] = c.grid.noise_scale;
    env["aggregate"] = enum_name(c.grid_aggregate, kAggregates);
  } else {
    env["n_agents"] = c.demand.n_agents;
    env["n_products"] = c.demand.n_products;
    env["horizon"] = c.demand.horizon;
    env["buyers"] = c.demand.buyers;
    env["demand_noise"] = c.demand.demand_noise;
  }
  json j;
  j["environment"] = env;
  j["ensemble"] = {{"n_adversaries", c.n_adversaries}, {"ablation_size", c.ablation_size}};
  j["ensemble"]["sample_size"] = c.sample_size ? json(*c.sample_size) : json(nullptr);
  j["attacker"] = {{"name", to_string(c.attacker)},
                   {"channel_policy", enum_name(c.channel_policy, kChannels)},
                   {"stress", c.stress},
                   {"offset", c.offset},
                   {"seed_mode", enum_name(c.seed_mode, kSeedModes)},
                   {"search_horizon", c.search_horizon},
                   {"candidate_grid", c.candidate_grid}};
  j["episodes"] = c.episodes;
  j["seeds"] = {{"env", c.seeds.env}, {"attack", c.seeds.attack}, {"ensemble", c.seeds.ensemble}};
  j["gamma"] = c.gamma;
  j["output"] = {{"dir", c.out_dir}};
  j["sweep"] = {{"variable", to_string(c.sweep_var)}, {"values", c.sweep_values}};
  return j;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  check_keys(j, "config",
             {"environment", "ensemble", "attacker", "episodes", "seeds", "gamma", "output", "sweep"});
  if (j.contains("environment")) {
    const json& e = j.at("environment");
    check_keys(e, "environment",
               {"name", "width", "height", "n_agents", "horizon", "noise", "noise_scale",
                "aggregate", "n_products", "buyers", "demand_noise"});
    read_enum(e, "name", c.environment, kEnvs);
    if (c.environment == EnvKind::grid_food) {
      read(e, "width", c.grid.width);
      read(e, "height", c.grid.height);
      read(e, "n_agents", c.grid.n_agents);
      read(e, "horizon", c.grid.horizon);
      read_enum(e, "noise", c.grid.noise, kNoise);
      read(e, "noise_scale", c.grid.noise_scale);
      read_enum(e, "aggregate", c.grid_aggregate, kAggregates);
    } else {
      read(e, "n_agents", c.demand.n_agents);
      read(e, "n_products", c.demand.n_products);
      read(e, "horizon", c.demand.horizon);
      read(e, "buyers", c.demand.buyers);
      read(e, "demand_noise", c.demand.demand_noise);
    }
  }
  if (j.contains("ensemble")) {
    const json& e = j.at("ensemble");
    check_keys(e, "ensemble", {"n_adversaries", "ablation_size", "sample_size"});
    read(e, "n_adversaries", c.n_adversaries);
    read(e, "ablation_size", c.ablation_size);
    if (e.contains("sample_size")) {
      if (e.at("sample_size").is_null()) c.sample_size.reset();
      else {
        std::uint64_t d = 0;
        read(e, "sample_size", d);
        c.sample_size = d;
      }
    }
  }
  if (j.contains("attacker")) {
    const json& a = j.at("attacker");
    check_keys(a, "attacker",
               {"name", "channel_policy", "stress", "offset", "seed_mode", "search_horizon",
                "candidate_grid"});
    read_enum(a, "name", c.attacker, kAttacks);
    read_enum(a, "channel_policy", c.channel_policy, kChannels);
    read(a, "stress", c.stress);
    read(a, "offset", c.offset);
    read_enum(a, "seed_mode", c.seed_mode, kSeedModes);
    read(a, "search_horizon", c.search_horizon);
    read(a, "candidate_grid", c.candidate_grid);
  }
  read(j, "episodes", c.episodes);
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    check_keys(s, "seeds", {"env", "attack", "ensemble"});
    read(s, "env", c.seeds.env);
    read(s, "attack", c.seeds.attack);
    read(s, "ensemble", c.seeds.ensemble);
  }
  read(j, "gamma", c.gamma);
  if (j.contains("output")) {
    check_keys(j.at("output"), "output", {"dir"});
    read(j.at("output"), "dir", c.out_dir);
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "sweep", {"variable", "values"});
    read_enum(s, "variable", c.sweep_var, kSweeps);
    read(s, "values", c.sweep_values);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace ame
