// ame: certificate calculator, sweeps, rollouts, oracle suite and detection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ame/certify.hpp"
#include "ame/config.hpp"
#include "ame/detect.hpp"
#include "ame/errors.hpp"
#include "ame/experiment.hpp"
#include "ame/instances.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ame;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed_env, seed_attack, seed_ensemble;
  std::string out;
  std::string format = "csv";
};

struct Overrides {
  std::string env;
  std::optional<std::size_t> n, c, k, episodes, horizon;
  std::optional<std::uint64_t> d;
  std::string attacker, channel_policy, noise, aggregate;
  std::optional<double> gamma, noise_scale;
  bool stress = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--seed-env", o.seed_env, "environment seed");
  cmd->add_option("--seed-attack", o.seed_attack, "attacker seed");
  cmd->add_option("--seed-ensemble", o.seed_ensemble, "ensemble sampling seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv"}));
}

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--env", o.env, "grid_food | demand_share");
  cmd->add_option("--n", o.n, "number of agents N");
  cmd->add_option("--c", o.c, "adversary budget C");
  cmd->add_option("--k", o.k, "ablation size k");
  cmd->add_option("--d", o.d, "sample size D");
  cmd->add_option("--attacker", o.attacker, "none|random|extreme|offset|perm|swap|flip|greedy");
  cmd->add_option("--channel-policy", o.channel_policy, "fixed | per_step");
  cmd->add_option("--episodes", o.episodes, "episodes per batch");
  cmd->add_option("--horizon", o.horizon, "episode horizon");
  cmd->add_option("--gamma", o.gamma, "discount");
  cmd->add_option("--noise", o.noise, "GridFood report noise: none | bounded");
  cmd->add_option("--noise-scale", o.noise_scale, "GridFood noise half-width");
  cmd->add_option("--aggregate", o.aggregate, "GridFood policy: median | mean");
  cmd->add_flag("--stress", o.stress, "allow C >= (N-1)/2");
}

ExperimentConfig resolve(const CommonOptions& co, const Overrides& ov) {
  ExperimentConfig c;
  if (!co.config_path.empty()) c = load_config(co.config_path, c);
  json patch = json::object();
  if (!ov.env.empty()) patch["environment"]["name"] = ov.env;
  if (!ov.attacker.empty()) patch["attacker"]["name"] = ov.attacker;
  if (!ov.channel_policy.empty()) patch["attacker"]["channel_policy"] = ov.channel_policy;
  if (!ov.noise.empty()) patch["environment"]["noise"] = ov.noise;
  if (!ov.aggregate.empty()) patch["environment"]["aggregate"] = ov.aggregate;
  if (!patch.empty()) c = config_from_json(patch, c);
  if (ov.n) (c.environment == EnvKind::grid_food ? c.grid.n_agents : c.demand.n_agents) = *ov.n;
  if (ov.horizon) (c.environment == EnvKind::grid_food ? c.grid.horizon : c.demand.horizon) = *ov.horizon;
  if (ov.noise_scale) c.grid.noise_scale = *ov.noise_scale;
  if (ov.c) c.n_adversaries = *ov.c;
  if (ov.k) c.ablation_size = *ov.k;
  if (ov.d) c.sample_size = *ov.d;
  if (ov.episodes) c.episodes = *ov.episodes;
  if (ov.gamma) c.gamma = *ov.gamma;
  if (ov.stress) c.stress = true;
  if (co.seed_env) c.seeds.env = *co.seed_env;
  if (co.seed_attack) c.seeds.attack = *co.seed_attack;
  if (co.seed_ensemble) c.seeds.ensemble = *co.seed_ensemble;
  if (!co.out.empty()) c.out_dir = co.out;
  return c;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_config_header(std::ostream& out, const json& resolved) {
  std::istringstream lines(resolved.dump(2));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
}

std::ofstream open_csv(const fs::path& path, const json& resolved) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_config_header(out, resolved);
  return out;
}

void write_plot_sidecar(const fs::path& csv, const std::string& x, const std::vector<std::string>& y,
                        const std::string& series) {
  json j{{"data", csv.filename().string()}, {"x", x}, {"y", y}, {"comment", "#"}};
  if (!series.empty()) j["series"] = series;
  fs::path side = csv;
  side.replace_extension(".plot.json");
  std::ofstream(side) << j.dump(2) << '\n';
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string seeds_line(const ExperimentConfig& c) {
  return "seeds: env=" + std::to_string(c.seeds.env) + " attack=" + std::to_string(c.seeds.attack) +
         " ensemble=" + std::to_string(c.seeds.ensemble);
}

// ---------------------------------------------------------------------------
// certify

struct CertifyOptions {
  std::size_t n = 0;
  std::optional<std::size_t> c, k;
  std::uint64_t d_max = 50;
  std::string out;
};

std::string k_cell(std::optional<std::size_t> k) { return k ? std::to_string(*k) : "nan"; }

void write_figure_tables(const fs::path& dir, const json& header) {
  {
    auto out = open_csv(dir / "c_vs_k.csv", header);
    out << "N,C,k_max\n";
    for (std::size_t N : {10, 15, 25, 30}) {
      for (std::size_t C = 1; 2 * C < N - 1; ++C) {
        out << N << ',' << C << ',' << k_cell(max_certifiable_k(N, C)) << '\n';
      }
    }
    write_plot_sidecar(dir / "c_vs_k.csv", "C", {"k_max"}, "N");
  }
  {
    auto out = open_csv(dir / "n_vs_c.csv", header);
    out << "k,N,C_max\n";
    for (std::size_t k : {1, 2, 4, 6}) {
      for (std::size_t N = 5; N <= 30; ++N) {
        // k beyond N-1 has no ablation; plotted as 0.
        out << k << ',' << N << ',' << (k <= N - 1 ? max_certifiable_C(N, k) : 0) << '\n';
      }
    }
    write_plot_sidecar(dir / "n_vs_c.csv", "N", {"C_max"}, "k");
  }
  {
    auto out = open_csv(dir / "n_vs_k.csv", header);
    out << "C,N,k_max\n";
    for (std::size_t C : {1, 2, 3}) {
      for (std::size_t N = 5; N <= 30; ++N) {
        out << C << ',' << N << ',' << k_cell(max_certifiable_k(N, C)) << '\n';
      }
    }
    write_plot_sidecar(dir / "n_vs_k.csv", "N", {"k_max"}, "C");
  }
}

int cmd_certify(const CertifyOptions& o) {
  const std::size_t N = o.n;
  if (N < 2 || N > kMaxClosedFormAgents) throw ConfigError("--n must lie in [2, 512]");
  json header{{"command", "certify"}, {"n", N}};
  if (o.c) header["c"] = *o.c;
  if (o.k) header["k"] = *o.k;

  std::cout << "N=" << N << "\n";
  if (!o.c) {
    std::cout << "C  k_max  n1(k_max)  n2(k_max)  u_adv(k_max)\n";
    for (std::size_t C = 1; C <= N - 1; ++C) {
      const auto k = max_certifiable_k(N, C);
      if (!k) break;
      std::cout << C << "  " << *k << "  " << binomial(N - 1, *k) << "  "
                << binomial(N - 1 - C, *k) << "  " << adversarial_vote_bound(N, C, *k) << "\n";
    }
    for (std::size_t k = 1; k <= N - 1 && k <= 8; ++k) {
      std::cout << "k=" << k << ": max certifiable C = " << max_certifiable_C(N, k) << "\n";
    }
  } else {
    const std::size_t C = *o.c;
    if (C > N - 1) throw ConfigError("--c must not exceed N-1");
    const auto kmax = max_certifiable_k(N, C);
    if (!assumption_holds(N, C)) {
      std::cout << "assumption violated: C=" << C << " is not below (N-1)/2=" << fmt((N - 1) / 2.0)
                << "; no certifiable k\n";
    }
    std::cout << "C=" << C << "\nk_max " << k_cell(kmax) << "\n";
    const std::size_t k = o.k ? *o.k : (kmax ? *kmax : 1);
    if (k < 1 || k > N - 1) throw ConfigError("--k must lie in [1, N-1]");
    const bool cond2 = dominating_benign_holds(N, C, k);
    std::cout << "k=" << k << " condition2 " << (cond2 ? "holds" : "fails") << "\n"
              << "max_certifiable_C(k=" << k << ") " << max_certifiable_C(N, k) << "\n"
              << "n1 " << binomial(N - 1, k) << "\nn2 " << binomial(N - 1 - C, k) << "\nu_adv "
              << adversarial_vote_bound(N, C, k) << "\n";
    if (cond2) {
      const BigInt n1 = binomial(N - 1, k);
      const std::uint64_t d_hi = n1 < BigInt(o.d_max) ? static_cast<std::uint64_t>(n1) : o.d_max;
      std::cout << "D  p_D\n";
      std::ofstream csv;
      if (!o.out.empty()) {
        csv = open_csv(prepare_out(o.out) / "p_d.csv", header);
        csv << "D,p_D\n";
      }
      for (std::uint64_t D = 1; D <= d_hi; ++D) {
        const double p = partial_sample_prob_continuous(N, C, k, D);
        std::cout << D << "  " << fmt(p) << "\n";
        if (csv.is_open()) csv << D << ',' << fmt(p) << '\n';
      }
      if (csv.is_open()) write_plot_sidecar(fs::path(o.out) / "p_d.csv", "D", {"p_D"}, "");
    }
  }
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o.out);
    auto out = open_csv(dir / "certify.csv", header);
    out << "N,C,k_max,u_adv_at_k_max\n";
    for (std::size_t C = 0; C <= N - 1; ++C) {
      const auto k = max_certifiable_k(N, C);
      out << N << ',' << C << ',' << k_cell(k) << ','
          << (k ? adversarial_vote_bound(N, C, *k).str() : std::string("nan")) << '\n';
      if (!k) break;
    }
    write_plot_sidecar(dir / "certify.csv", "C", {"k_max"}, "");
    write_figure_tables(dir, header);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<std::uint64_t> default_sweep_values(const ExperimentConfig& c) {
  std::vector<std::uint64_t> v;
  const std::size_t n = c.n_channels();
  switch (c.sweep_var) {
    case SweepVar::k: {
      const std::size_t kmax = max_certifiable_k(c.n_agents(), c.n_adversaries).value_or(1);
      for (std::size_t k = 1; k <= std::min(n, kmax + 2); ++k) v.push_back(k);
      break;
    }
    case SweepVar::D: {
      const std::uint64_t n1 = small_binomial(n, c.ablation_size);
      for (std::uint64_t d = n1; d >= 1; d = d > 1 ? d - std::max<std::uint64_t>(1, n1 / 8) : 0) {
        v.push_back(d);
        if (d == 1) break;
      }
      if (v.back() != 1) v.push_back(1);
      break;
    }
    case SweepVar::C:
      for (std::size_t C = 0; 2 * C < n; ++C) v.push_back(C);
      break;
  }
  return v;
}

int cmd_sweep(ExperimentConfig c, const std::string& var) {
  if (!var.empty()) c.sweep_var = parse_sweep_var(var);
  if (c.sweep_values.empty()) c.sweep_values = default_sweep_values(c);
  c.validate();
  const fs::path dir = prepare_out(c.out_dir);
  const json header = to_json(c);
  auto out = open_csv(dir / "sweep.csv", header);
  const char* name = to_string(c.sweep_var);
  out << name << ",clean_mean,clean_std,attacked_mean,attacked_std,certified_fraction\n";
  std::cout << seeds_line(c) << "\n" << name << "  clean(mean+-std)  attacked(mean+-std)  certified\n";
  for (std::uint64_t v : c.sweep_values) {
    ExperimentConfig run = c;
    switch (c.sweep_var) {
      case SweepVar::k:
        run.ablation_size = v;
        run.sample_size.reset();
        break;
      case SweepVar::D:
        run.sample_size = v;
        break;
      case SweepVar::C:
        run.n_adversaries = v;
        break;
    }
    run.validate();
    const BatchStats clean = run_batch(run, false, false);
    const BatchStats attacked = run_batch(run, true, true);
    out << v << ',' << fmt(clean.mean) << ',' << fmt(clean.stddev) << ',' << fmt(attacked.mean) << ','
        << fmt(attacked.stddev) << ',' << fmt(attacked.certified_fraction) << '\n';
    std::cout << v << "  " << fmt(clean.mean) << "+-" << fmt(clean.stddev) << "  "
              << fmt(attacked.mean) << "+-" << fmt(attacked.stddev) << "  "
              << fmt(attacked.certified_fraction) << "\n";
  }
  write_plot_sidecar(dir / "sweep.csv", name, {"clean_mean", "attacked_mean"}, "");
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(ExperimentConfig c, bool clean) {
  c.validate();
  const fs::path dir = prepare_out(c.out_dir);
  const json header = to_json(c);
  const auto outcomes = parallel_map<EpisodeOutcome>(
      c.episodes, [&](std::size_t i) { return run_configured_episode(c, i, !clean); });
  auto summary = open_csv(dir / "summary.csv", header);
  summary << "episode,return,steps,certified_steps\n";
  std::size_t certified = 0, steps = 0;
  std::vector<double> returns;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    char name[64];
    std::snprintf(name, sizeof name, "episode_%04zu.csv", i);
    auto traj = open_csv(dir / name, header);
    write_trajectory(traj, o.trajectory, o.reports);
    std::snprintf(name, sizeof name, "certificates_%04zu.csv", i);
    auto cert = open_csv(dir / name, header);
    write_certificate_csv(cert, o.reports);
    summary << i << ',' << fmt(o.discounted_return) << ',' << o.trajectory.steps.size() << ','
            << o.certified_steps << '\n';
    certified += o.certified_steps;
    steps += o.trajectory.steps.size();
    returns.push_back(o.discounted_return);
  }
  write_plot_sidecar(dir / "summary.csv", "episode", {"return"}, "");
  const BatchStats s = summarize(returns, certified, steps);
  std::cout << seeds_line(c) << "\nepisodes " << c.episodes << (clean ? " (clean)" : " (attacked)")
            << "\nreturn mean " << fmt(s.mean) << " std " << fmt(s.stddev)
            << "\ncertified step fraction " << fmt(s.certified_fraction) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify

void print_violation(const OracleViolation& v) {
  std::cout << "    counterexample: channels";
  for (std::size_t i = 0; i < v.channels.size(); ++i) {
    std::cout << ' ' << v.channels[i] << "<-";
    for (std::size_t l = 0; l < v.payloads[i].size(); ++l) {
      std::cout << (l ? ";" : "") << fmt(v.payloads[i][l]);
    }
  }
  std::cout << " action " << v.action.to_string()
            << (v.condition_held ? " (condition held)" : " (condition failed)") << "\n";
}

bool run_instance(const OracleInstance& inst, std::ostream* csv) {
  const OracleReport r = oracle_verify_action_certificate(*inst.policy, inst.history, inst.benign,
                                                          inst.config, inst.alphabet, inst.options);
  std::cout << inst.name << ": " << r.perturbations << " perturbations, condition held in "
            << r.condition_held << ", violations " << r.violations.size() << "\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(r.violations.size(), 3); ++i) {
    print_violation(r.violations[i]);
  }
  if (csv) {
    *csv << inst.name << ',' << r.perturbations << ',' << r.condition_held << ','
         << r.violations.size() << '\n';
  }
  return r.sound();
}

int cmd_verify(const std::string& instance, const std::string& mode, std::uint64_t seeds,
               const CommonOptions& co) {
  const std::uint64_t base = co.seed_ensemble.value_or(3);
  std::ofstream csv;
  json header{{"command", "verify"}, {"instance", instance}, {"mode", mode}, {"seeds", seeds},
              {"seed_ensemble", base}};
  if (!co.out.empty()) csv = open_csv(prepare_out(co.out) / "verify.csv", header);
  std::ostream* sink = csv.is_open() ? &csv : nullptr;
  bool ok = true;

  if (mode == "partial") {
    if (sink) *sink << "check,seeds,predicted,event_rate,benign_rate,passed\n";
    for (const auto& c : run_partial_checks(seeds, base)) {
      std::cout << c.name << ": p_D " << fmt(c.estimate.predicted) << " empirical "
                << fmt(c.estimate.event_rate()) << " (3se " << fmt(3 * c.estimate.standard_error())
                << ") benign " << fmt(c.estimate.benign_rate()) << (c.passed ? " ok" : " FAIL")
                << "\n";
      if (sink) {
        *sink << c.name << ',' << c.estimate.seeds << ',' << fmt(c.estimate.predicted) << ','
              << fmt(c.estimate.event_rate()) << ',' << fmt(c.estimate.benign_rate()) << ','
              << int(c.passed) << '\n';
      }
      ok = ok && c.passed;
    }
    std::cout << (ok ? "verify: all partial-sample checks passed\n" : "verify: FAILED\n");
    return ok ? 0 : 1;
  }
  if (mode != "full") throw ConfigError("--mode must be full or partial");

  if (sink) *sink << "instance,perturbations,condition_held,violations\n";
  std::vector<OracleInstance> list;
  if (instance == "default") list.push_back(default_discrete_instance());
  else if (instance == "broken") list.push_back(broken_instance());
  else if (instance == "discrete") list = shipped_discrete_instances();
  else if (instance == "continuous") list = shipped_continuous_instances();
  else if (instance == "all") {
    list = shipped_discrete_instances();
    for (auto& i : shipped_continuous_instances()) list.push_back(std::move(i));
  } else {
    throw ConfigError("unknown instance '" + instance + "'");
  }
  for (const auto& inst : list) ok = run_instance(inst, sink) && ok;
  std::cout << (ok ? "verify: zero violations\n" : "verify: violations found\n");
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// detect

int cmd_detect(ExperimentConfig c, std::size_t window, std::optional<std::size_t> flag) {
  c.validate();
  const std::size_t n_flag = flag.value_or(c.n_adversaries);
  const fs::path dir = prepare_out(c.out_dir);
  const json header = to_json(c);
  const DetectionRun run = run_detection(c, window);
  auto out = open_csv(dir / "bias.csv", header);
  write_bias_csv(out, run.scores);
  write_plot_sidecar(dir / "bias.csv", "channel", {"beta"}, "");
  const Recertification r = flag_and_recertify(run.scores, n_flag, c.n_agents(), c.n_adversaries);

  std::cout << seeds_line(c) << "\nepisodes averaged " << window << "\nattacked channels:";
  for (std::size_t ch : run.attacked_channels) std::cout << ' ' << ch;
  std::cout << "\nchannel  beta\n";
  for (const auto& s : run.scores) std::cout << s.channel << "  " << fmt(s.beta) << "\n";
  std::cout << "flagged:";
  for (std::size_t ch : r.flagged) std::cout << ' ' << ch;
  std::cout << "\nk_max " << k_cell(r.previous_max_k) << " -> " << k_cell(r.new_max_k) << " (N-1="
            << c.n_channels() - n_flag << " messages, C=" << (c.n_adversaries > n_flag ? c.n_adversaries - n_flag : 0)
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ablated message ensembles: certificates, simulation and verification"};
  app.require_subcommand(1);

  CertifyOptions certify;
  auto* c_cmd = app.add_subcommand("certify", "closed-form certificate tables");
  c_cmd->add_option("--n", certify.n, "number of agents N")->required();
  c_cmd->add_option("--c", certify.c, "adversaries C");
  c_cmd->add_option("--k", certify.k, "ablation size k");
  c_cmd->add_option("--d-max", certify.d_max, "largest D in the p_D curve");
  c_cmd->add_option("--out", certify.out, "write CSV tables here");
  std::string certify_format = "csv";
  c_cmd->add_option("--format", certify_format, "output format")->check(CLI::IsMember({"csv"}));

  CommonOptions s_common, m_common, v_common, d_common;
  Overrides s_ov, m_ov, d_ov;

  auto* s_cmd = app.add_subcommand("sweep", "sweep k, D or C with and without attack");
  add_common(s_cmd, s_common);
  add_overrides(s_cmd, s_ov);
  std::string sweep_var;
  std::vector<std::uint64_t> sweep_values;
  s_cmd->add_option("--var", sweep_var, "k | D | C");
  s_cmd->add_option("--values", sweep_values, "values to sweep (space or comma separated)")->delimiter(',');

  auto* m_cmd = app.add_subcommand("simulate", "run episodes and write trajectories");
  add_common(m_cmd, m_common);
  add_overrides(m_cmd, m_ov);
  bool clean = false;
  m_cmd->add_flag("--clean", clean, "run without the attacker");

  auto* v_cmd = app.add_subcommand("verify", "exhaustive oracle and sampling checks");
  add_common(v_cmd, v_common);
  std::string instance = "default", mode = "full";
  std::uint64_t seeds = 10000;
  v_cmd->add_option("--instance", instance, "default | broken | discrete | continuous | all");
  v_cmd->add_option("--mode", mode, "full | partial");
  v_cmd->add_option("--seeds", seeds, "seeds for partial mode");

  auto* d_cmd = app.add_subcommand("detect", "action-bias scores and re-certification");
  add_common(d_cmd, d_common);
  add_overrides(d_cmd, d_ov);
  std::size_t window = kDefaultBiasWindow;
  std::optional<std::size_t> flag;
  d_cmd->add_option("--window", window, "episodes averaged");
  d_cmd->add_option("--flag", flag, "channels to flag (default C)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_cmd) return cmd_certify(certify);
    if (*s_cmd) {
      ExperimentConfig cfg = resolve(s_common, s_ov);
      if (!sweep_values.empty()) cfg.sweep_values = sweep_values;
      return cmd_sweep(cfg, sweep_var);
    }
    if (*m_cmd) return cmd_simulate(resolve(m_common, m_ov), clean);
    if (*v_cmd) {
      if (!v_common.config_path.empty()) {
        std::cerr << "verify runs the shipped instances; --config is ignored\n";
      }
      return cmd_verify(instance, mode, seeds, v_common);
    }
    if (*d_cmd) return cmd_detect(resolve(d_common, d_ov), window, flag);
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
