#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ame/demand_share.hpp"
#include "ame/episode.hpp"
#include "ame/errors.hpp"
#include "ame/grid_food.hpp"
#include "ame/threat.hpp"

using namespace ame;

namespace {

GridFoodEnv grid(std::size_t horizon = 30) {
  GridFoodParams p;
  p.horizon = horizon;
  return GridFoodEnv(p);
}

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

}  // namespace

TEST_CASE("grid action ids") {
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      const auto id = GridFoodEnv::action_id(dx, dy);
      CHECK(id < GridFoodEnv::kActionCount);
      CHECK(GridFoodEnv::action_delta(id) == std::pair{dx, dy});
    }
  }
}

TEST_CASE("grid step mechanics") {
  auto env = grid();
  env.place({3, 3}, {4, 3});
  auto r = env.step(Action::discrete(GridFoodEnv::action_id(1, 0)));
  CHECK(r.done);
  CHECK(r.reward == -0.5);
  CHECK(env.victim() == Cell{4, 3});
  CHECK_THROWS_AS(env.step(Action::discrete(0)), EpisodeFinished);

  env.place({0, 0}, {5, 5});
  r = env.step(Action::discrete(GridFoodEnv::action_id(-1, 0)));
  CHECK(env.victim() == Cell{0, 0});
  CHECK(r.reward == -0.5);
  CHECK_FALSE(r.done);
  env.step(Action::discrete(GridFoodEnv::action_id(-1, -1)));
  CHECK(env.victim() == Cell{0, 0});

  env.place({8, 8}, {0, 0});
  env.step(Action::discrete(GridFoodEnv::action_id(1, 1)));
  CHECK(env.victim() == Cell{8, 8});

  auto short_env = grid(2);
  short_env.place({0, 0}, {8, 8});
  short_env.step(Action::discrete(GridFoodEnv::action_id(0, 0)));
  CHECK(short_env.step(Action::discrete(GridFoodEnv::action_id(0, 0))).done);
}

TEST_CASE("benign grid messages all equal the food cell") {
  auto env = grid();
  for (std::uint64_t s = 0; s < 50; ++s) {
    env.reset(s);
    const auto m = env.benign_messages();
    REQUIRE(m.size() == 8);
    for (std::size_t c = 0; c < m.size(); ++c) {
      REQUIRE(m.payload(c) == Payload{double(env.food().x), double(env.food().y)});
    }
    REQUIRE_FALSE(env.victim() == env.food());
  }
}

TEST_CASE("scripted grid policy on benign messages") {
  const GridFoodPolicy policy;
  for (int fx = 0; fx < 9; fx += 2) {
    for (int vx = 0; vx < 9; ++vx) {
      if (vx == fx) continue;
      // same row: the shortest path is straight, return -0.5 * d0
      auto env = grid();
      env.place({vx, 4}, {fx, 4});
      double total = 0;
      while (!env.done()) {
        total += env.step(ensemble_act(policy, env.history(), env.benign_messages(), 2).action).reward;
      }
      REQUIRE(total == -0.5 * std::abs(vx - fx));
    }
  }
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Cell v{int(rng.uniform_index(9)), int(rng.uniform_index(9))};
    Cell f{int(rng.uniform_index(9)), int(rng.uniform_index(9))};
    if (v == f) continue;
    auto env = grid();
    env.place(v, f);
    std::size_t steps = 0;
    while (!env.done()) {
      const auto d = ensemble_act(policy, env.history(), env.benign_messages(), 3);
      env.step(d.action);
      ++steps;
    }
    REQUIRE(env.victim() == f);
    REQUIRE(steps == static_cast<std::size_t>(chebyshev(v, f)));
  }
}

TEST_CASE("benign k-samples agree, so the noiseless benign action is unique") {
  auto env = grid();
  const GridFoodPolicy policy;
  for (std::uint64_t s = 0; s < 20; ++s) {
    env.reset(s);
    const auto d = ensemble_act(policy, env.history(), env.benign_messages(), 2);
    REQUIRE(d.votes.size() == 1);
    REQUIRE(d.top_votes() == 28);
  }
}

TEST_CASE("bounded report noise") {
  GridFoodParams p;
  p.noise = ReportNoise::bounded;
  p.noise_scale = 1.0;
  GridFoodEnv env(p);
  env.reset(4);
  const auto m = env.benign_messages();
  bool any_diff = false;
  for (std::size_t c = 0; c < m.size(); ++c) {
    CHECK(std::abs(m.payload(c)[0] - env.food().x) <= 1.0);
    CHECK(std::abs(m.payload(c)[1] - env.food().y) <= 1.0);
    any_diff = any_diff || m.payload(c) != m.payload(0);
  }
  CHECK(any_diff);
  env.step(Action::discrete(GridFoodEnv::action_id(0, 0)));
  CHECK(env.benign_messages() == m);  // fixed for the episode
}

TEST_CASE("demand reward") {
  DemandShareEnv env{DemandShareParams{}};
  env.reset(1);
  const std::vector<std::vector<double>> others(9, {1, 1, 1});
  env.set_state({0, 0, 0}, {1, 1, 1}, others, {3, 0, 0});
  CHECK(env.reward_for({0, 0, 0}) == -3.0);
  CHECK(env.step(Action::continuous({0, 0, 0})).reward == -3.0);

  env.reset(1);
  env.set_state({2, 1, 0}, {1, 1, 1}, others, {5, 4, 3});
  CHECK(env.reward_for({3, 3, 3}) == 0.0);
  CHECK(env.reward_for({0, 0, 0}) == doctest::Approx(-std::sqrt(9.0 + 9.0 + 9.0)));
  CHECK_THROWS_AS(env.reward_for({0, 0}), DimensionMismatch);
}

TEST_CASE("demand episode replays against a straight-line recomputation") {
  DemandShareParams p;
  DemandShareEnv env(p);
  const DemandSharePolicy policy(p.n_products, env.max_restock());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env.reset(seed);
    double total = 0, replay = 0;
    std::vector<double> inv = env.inventory();
    while (!env.done()) {
      const auto d = env.demand();
      const auto a = ensemble_act(policy, env.history(), env.benign_messages(), 3).action.vec();
      const auto r = env.step(Action::continuous(a)).reward;
      REQUIRE(r <= 0.0);
      total += r;
      double sq = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        const double aj = std::clamp(a[j], -env.max_restock(), env.max_restock());
        const double stock = std::max(inv[j] + aj, 0.0);
        sq += (stock - d[j]) * (stock - d[j]);
        inv[j] = std::min(std::max(stock - d[j], 0.0), env.capacity());
      }
      replay -= std::sqrt(sq);
      REQUIRE(env.inventory() == inv);
    }
    CHECK(total == doctest::Approx(replay).epsilon(1e-12));
  }
}

TEST_CASE("demand messages and observation layout") {
  DemandShareEnv env{DemandShareParams{}};
  env.reset(7);
  CHECK(env.n_channels() == 9);
  CHECK(env.horizon() == 50);
  CHECK(env.history().observation.size() == 6);
  const auto m = env.benign_messages();
  const auto dom = env.payload_domain();
  for (std::size_t c = 0; c < m.size(); ++c) {
    CHECK(m.payload(c).size() == 3);
    CHECK(dom.contains(m.payload(c)));
  }
}

TEST_CASE("episodes are deterministic in their seeds") {
  const GridFoodPolicy gp;
  GridFoodParams params;
  params.noise = ReportNoise::bounded;
  GridFoodEnv a(params), b(params);
  const EnsemblePolicy victim(gp, 2, 10);
  auto make = [] {
    return ThreatHarness(std::make_unique<RandomAttacker>(PayloadDomain::box({0, 0}, {8, 8})),
                         AttackBudget{2});
  };
  auto ha = make(), hb = make();
  const EpisodeSeeds s{5, 6, 7};
  const auto ta = run_episode(a, victim, &ha, s);
  const auto tb = run_episode(b, victim, &hb, s);
  REQUIRE(ta.steps.size() == tb.steps.size());
  for (std::size_t i = 0; i < ta.steps.size(); ++i) {
    CHECK(ta.steps[i].received == tb.steps[i].received);
    CHECK(ta.steps[i].decision.action == tb.steps[i].decision.action);
  }
  CHECK(ta.discounted_return() == tb.discounted_return());

  DemandShareEnv da{DemandShareParams{}}, db{DemandShareParams{}};
  const DemandSharePolicy dp(3, da.max_restock());
  const EnsemblePolicy dv(dp, 2);
  CHECK(run_episode(da, dv, nullptr, s).discounted_return() ==
        run_episode(db, dv, nullptr, s).discounted_return());
}

TEST_CASE("full ensemble ignores the ensemble seed") {
  const GridFoodPolicy gp;
  GridFoodEnv env{GridFoodParams{}};
  const EnsemblePolicy victim(gp, 2);
  const auto t1 = run_episode(env, victim, nullptr, {3, 0, 1});
  const auto t2 = run_episode(env, victim, nullptr, {3, 0, 999});
  CHECK(t1.total_reward() == t2.total_reward());
  REQUIRE(t1.steps.size() == t2.steps.size());
  for (std::size_t i = 0; i < t1.steps.size(); ++i) {
    CHECK(t1.steps[i].decision.action == t2.steps[i].decision.action);
  }
}

TEST_CASE("C = 0 attack matches the clean run") {
  const GridFoodPolicy gp;
  GridFoodParams params;
  params.noise = ReportNoise::bounded;
  GridFoodEnv env(params);
  const EnsemblePolicy victim(gp, 2);
  ThreatHarness h(std::make_unique<ExtremeAttacker>(env.payload_domain()), AttackBudget{0});
  for (std::uint64_t e = 0; e < 5; ++e) {
    const auto seeds = EpisodeSeeds{1, 2, 3}.for_episode(e);
    const auto clean = run_episode(env, victim, nullptr, seeds);
    const auto zero = run_episode(env, victim, &h, seeds);
    REQUIRE(clean.steps.size() == zero.steps.size());
    for (std::size_t i = 0; i < clean.steps.size(); ++i) {
      CHECK(clean.steps[i].received == zero.steps[i].received);
      CHECK(clean.steps[i].reward == zero.steps[i].reward);
    }
  }
}

TEST_CASE("discounted return") {
  Trajectory t;
  t.gamma = 0.5;
  for (double r : {-1.0, -1.0, -1.0}) {
    StepRecord s;
    s.reward = r;
    t.steps.push_back(s);
  }
  CHECK(t.total_reward() == -3.0);
  CHECK(t.discounted_return() == -1.75);
  CHECK(t.discounted_return(1.0) == -3.0);
}

TEST_CASE("run_episode rejects mismatched configurations") {
  const GridFoodPolicy gp;
  GridFoodEnv env{GridFoodParams{}};
  CHECK_THROWS(run_episode(env, EnsemblePolicy(gp, 9), nullptr, {}));
  CHECK_THROWS(run_episode(env, EnsemblePolicy(gp, 2, 29), nullptr, {}));
}
