#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ame/detect.hpp"
#include "ame/errors.hpp"
#include "ame/experiment.hpp"
#include "ame/instances.hpp"
#include "oracles.hpp"

using namespace ame;

namespace {

MessageSet vectors(std::vector<Payload> p) { return MessageSet::from_payloads(std::move(p)); }

const FunctionPolicy passthrough(ActionKind::continuous, 2, [](const History&, const KSampleView& s) {
  return Action::continuous(s.payload(0));
});

std::vector<BiasScore> scores_of(std::vector<double> betas) {
  std::vector<BiasScore> s;
  for (std::size_t i = 0; i < betas.size(); ++i) s.push_back({i, betas[i], 1});
  return s;
}

}  // namespace

TEST_CASE("action bias basics") {
  const auto same = action_bias(passthrough, {}, vectors({{1, 2}, {1, 2}, {1, 2}, {1, 2}}));
  REQUIRE(same.size() == 4);
  for (const auto& s : same) CHECK(s.beta == 0.0);

  const double delta = 0.75;
  const auto one = action_bias(passthrough, {},
                               vectors({{1, 1}, {1, 1}, {1 + delta, 1 + delta}, {1, 1}, {1, 1}}));
  for (const auto& s : one) CHECK(s.beta == (s.channel == 2 ? 2 * delta : 0.0));

  CHECK_THROWS_AS(action_bias(passthrough, {}, vectors({{1, 1}, {2, 2}})), InvalidRange);
}

TEST_CASE("action bias against an independent median") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(8);
    std::vector<Payload> p(n);
    for (auto& x : p) x = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
    std::vector<std::vector<double>> acts(p.begin(), p.end());
    const auto med = oracle::sort_median(acts);
    const auto got = action_bias(passthrough, {}, vectors(p));
    for (std::size_t j = 0; j < n; ++j) {
      const double want = std::abs(p[j][0] - med[0]) + std::abs(p[j][1] - med[1]);
      REQUIRE(got[j].beta == doctest::Approx(want).epsilon(1e-12));
      REQUIRE(got[j].beta >= 0.0);
    }
    // scale equivariance
    const double lambda = rng.uniform(0.1, 10);
    std::vector<Payload> q = p;
    for (auto& x : q) x = {x[0] * lambda, x[1] * lambda};
    const auto scaled = action_bias(passthrough, {}, vectors(q));
    for (std::size_t j = 0; j < n; ++j) {
      REQUIRE(scaled[j].beta == doctest::Approx(lambda * got[j].beta).epsilon(1e-9));
    }
  }
}

TEST_CASE("discrete actions are one-hot embedded") {
  const auto policy = plurality_policy(3);
  std::vector<Payload> p{symbol_payload(0), symbol_payload(0), symbol_payload(0), symbol_payload(2)};
  const auto s = action_bias(*policy, {}, vectors(p));
  CHECK(s[0].beta == 0.0);
  CHECK(s[3].beta == 2.0);
}

TEST_CASE("median robustness bounds benign scores") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Payload> p(8);
    for (auto& x : p) x = {rng.uniform(0, 1), rng.uniform(0, 1)};
    double spread = 0;
    for (std::size_t l = 0; l < 2; ++l) {
      double lo = 1, hi = 0;
      for (const auto& x : p) lo = std::min(lo, x[l]), hi = std::max(hi, x[l]);
      spread += hi - lo;
    }
    auto attacked = p;
    attacked[1] = {50, -50};
    attacked[6] = {-40, 70};
    attacked[3] = {90, 90};
    const auto s = action_bias(passthrough, {}, vectors(attacked));
    for (std::size_t j : {0, 2, 4, 5, 7}) REQUIRE(s[j].beta <= spread + 1e-12);
  }
}

TEST_CASE("bias accumulator averages per-episode means") {
  BiasAccumulator acc(2);
  acc.add_step(scores_of({1, 0}));
  acc.add_step(scores_of({3, 0}));
  acc.end_episode();
  acc.end_episode();  // empty episode ignored
  acc.add_step(scores_of({6, 2}));
  acc.end_episode();
  CHECK(acc.episodes() == 2);
  const auto avg = acc.average();
  CHECK(avg[0].beta == 4.0);
  CHECK(avg[1].beta == 1.0);
  CHECK(avg[0].episodes_averaged == 2);
}

TEST_CASE("flag and recertify") {
  const auto s30 = scores_of(std::vector<double>(29, 0.1));
  auto hot = s30;
  hot[17].beta = 5;
  const auto r = flag_and_recertify(hot, 1, 30, 3);
  CHECK(r.flagged == std::vector<std::size_t>{17});
  CHECK(r.previous_max_k == 5);
  CHECK(r.new_max_k == 8);

  CHECK(flag_and_recertify(hot, 0, 30, 3).new_max_k == max_certifiable_k(30, 3));
  const auto all = flag_and_recertify(hot, 4, 30, 3);
  CHECK(all.new_max_k == 29 - 4);
  CHECK(flag_and_recertify(hot, 3, 30, 3).new_max_k == 29 - 3);

  // ties go to the lower channel
  CHECK(flag_and_recertify(scores_of({1, 2, 2, 0}), 2, 5, 1).flagged == std::vector<std::size_t>{1, 2});

  for (std::size_t N = 8; N <= 40; ++N) {
    for (std::size_t C = 1; 2 * C + 1 < N; ++C) {
      std::size_t prev = 0;
      for (std::size_t c = 0; c <= C; ++c) {
        const auto k = flag_and_recertify(scores_of(std::vector<double>(N - 1, 0)), c, N, C).new_max_k;
        REQUIRE(k.has_value());
        REQUIRE(*k >= prev);
        REQUIRE(k == oracle::max_k(unsigned(N - c), unsigned(C - c)));
        prev = *k;
      }
    }
  }
}

TEST_CASE("bias csv") {
  std::ostringstream out;
  write_bias_csv(out, scores_of({0.5, 1.5}));
  CHECK(out.str().rfind("channel,beta,episodes\n0,0.5,1\n1,1.5,1", 0) == 0);
}

TEST_CASE("hacked channels score above benign ones") {
  ExperimentConfig cfg;
  cfg.grid.noise = ReportNoise::bounded;
  cfg.grid.noise_scale = 1.0;
  cfg.grid_aggregate = ReportAggregate::mean;
  cfg.attacker = AttackKind::extreme;
  cfg.n_adversaries = 2;
  cfg.ablation_size = 2;
  cfg.episodes = 20;
  const auto run = run_detection(cfg, 20);
  REQUIRE(run.attacked_channels.size() == 2);
  double min_hacked = INFINITY, max_benign = 0;
  for (const auto& s : run.scores) {
    CHECK(s.episodes_averaged == 20);
    const bool hacked = std::count(run.attacked_channels.begin(), run.attacked_channels.end(), s.channel);
    if (hacked) min_hacked = std::min(min_hacked, s.beta);
    else max_benign = std::max(max_benign, s.beta);
  }
  CHECK(min_hacked > max_benign);
}
