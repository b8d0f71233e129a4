#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "ame/certmath.hpp"
#include "ame/errors.hpp"
#include "oracles.hpp"

using namespace ame;

TEST_CASE("binomial") {
  CHECK(binomial(8, 2) == 28);
  CHECK(binomial(5, 7) == 0);
  for (std::uint64_t n = 0; n <= 64; ++n) {
    CHECK(binomial(n, 0) == 1);
    for (unsigned r = 0; r <= n; ++r) CHECK(binomial(n, r) == oracle::choose(n, r));
  }
  CHECK(binomial(100, 50) == BigInt("100891344545564193334812497256"));
}

TEST_CASE("EnsembleConfig derived counts and validation") {
  const EnsembleConfig c(10, 2, 2);
  CHECK(c.n1() == 36);
  CHECK(c.n2() == 21);
  CHECK(c.u_adv() == 15);
  CHECK(c.sample_size() == 36);
  CHECK_FALSE(c.is_partial());

  CHECK_THROWS_AS(EnsembleConfig(10, 2, 10), InvalidRange);
  CHECK_THROWS_AS(EnsembleConfig(10, 2, 0), InvalidRange);
  CHECK_THROWS_AS(EnsembleConfig(10, 2, 2, 37), InvalidRange);
  CHECK_THROWS_AS(EnsembleConfig(10, 2, 2, 0), InvalidRange);
  CHECK_THROWS_AS(EnsembleConfig(1, 0, 1), InvalidRange);
  CHECK_NOTHROW(EnsembleConfig(10, 2, 2, 36));
}

TEST_CASE("dominating benign condition") {
  CHECK(dominating_benign_holds(10, 2, 2));
  CHECK(dominating_benign_holds(10, 4, 1));
  // C(3,2) = 3 is not above half of C(4,2) = 6.
  CHECK(oracle::choose(3, 2) * 2 == oracle::choose(4, 2));
  CHECK_FALSE(dominating_benign_holds(5, 1, 2));
  CHECK_THROWS_AS(dominating_benign_holds(10, 1, 0), InvalidRange);
  CHECK_THROWS_AS(dominating_benign_holds(10, 1, 10), InvalidRange);

  SUBCASE("matches the product form everywhere up to N=40") {
    for (unsigned N = 2; N <= 40; ++N) {
      for (unsigned C = 0; C <= N - 1; ++C) {
        for (unsigned k = 1; k <= N - 1; ++k) {
          REQUIRE(dominating_benign_holds(N, C, k) == oracle::product_condition(N, C, k));
        }
      }
    }
  }
}

TEST_CASE("max certifiable k") {
  CHECK(max_certifiable_k(10, 1) == 4);
  CHECK(max_certifiable_k(10, 2) == 2);
  CHECK(max_certifiable_k(10, 3) == 1);
  CHECK(max_certifiable_k(10, 4) == 1);
  CHECK(max_certifiable_k(30, 3) == 5);
  CHECK(max_certifiable_k(5, 1) == 1);
  CHECK_FALSE(max_certifiable_k(5, 2).has_value());
  CHECK(max_certifiable_k(10, 0) == 9);

  for (unsigned N = 2; N <= 64; ++N) {
    for (unsigned C = 0; C <= N - 1; ++C) {
      const auto got = max_certifiable_k(N, C);
      const auto want = oracle::max_k(N, C);
      REQUIRE(got.has_value() == want.has_value());
      if (got) REQUIRE(*got == *want);
      // none exactly when the attacking-power assumption fails
      REQUIRE(got.has_value() == assumption_holds(N, C));
    }
  }
}

TEST_CASE("figure series") {
  auto k_of = [](std::size_t N, std::size_t C) { return max_certifiable_k(N, C).value_or(0); };
  const std::vector<std::pair<std::size_t, std::vector<std::size_t>>> c_vs_k = {
      {10, {4, 2, 1, 1}},
      {15, {6, 3, 2, 1, 1, 1}},
      {25, {11, 6, 4, 3, 2, 2, 1, 1, 1, 1, 1}},
      {30, {14, 8, 5, 4, 3, 2, 2, 2, 1, 1, 1, 1, 1, 1}},
  };
  for (const auto& [N, ks] : c_vs_k) {
    for (std::size_t C = 1; C <= ks.size(); ++C) {
      INFO("N=" << N << " C=" << C);
      CHECK(k_of(N, C) == ks[C - 1]);
    }
  }

  const std::vector<std::size_t> c_k1 = {1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7,
                                         8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13, 14};
  const std::vector<std::size_t> c_k2 = {0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4,
                                         4, 5, 5, 5, 5, 6, 6, 6, 7, 7, 7, 8, 8};
  const std::vector<std::size_t> c_k4 = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2,
                                         2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 4, 4, 4};
  for (std::size_t N = 5; N <= 30; ++N) {
    INFO("N=" << N);
    CHECK(max_certifiable_C(N, 1) == c_k1[N - 5]);
    CHECK(max_certifiable_C(N, 2) == c_k2[N - 5]);
    CHECK(max_certifiable_C(N, 4) == c_k4[N - 5]);
    if (N >= 7) CHECK(max_certifiable_C(N, 6) == (N <= 13 ? 0u : N <= 22 ? 1u : 2u));
    CHECK(k_of(N, 1) == c_k1[N - 5]);
  }
  const std::vector<std::size_t> k_c2 = {1, 1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4,
                                         5, 5, 5, 5, 6, 6, 6, 7, 7, 7, 8, 8};
  const std::vector<std::size_t> k_c3 = {1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3,
                                         3, 3, 4, 4, 4, 4, 4, 5, 5, 5, 5};
  CHECK_FALSE(max_certifiable_k(5, 2).has_value());
  for (std::size_t N = 6; N <= 30; ++N) CHECK(k_of(N, 2) == k_c2[N - 6]);
  for (std::size_t N = 5; N <= 7; ++N) CHECK_FALSE(max_certifiable_k(N, 3).has_value());
  for (std::size_t N = 8; N <= 30; ++N) CHECK(k_of(N, 3) == k_c3[N - 8]);
}

TEST_CASE("max certifiable C") {
  CHECK(max_certifiable_C(10, 1) == 4);
  CHECK(max_certifiable_C(30, 2) == 8);
  for (std::size_t N = 3; N <= 40; ++N) CHECK(max_certifiable_C(N, N - 1) == 0);
  CHECK_THROWS_AS(max_certifiable_C(10, 10), InvalidRange);
}

TEST_CASE("adversarial vote bound") {
  CHECK(adversarial_vote_bound(9, 2, 2) == 13);
  CHECK(adversarial_vote_bound(10, 2, 2) == 15);
  CHECK(oracle::choose(9, 2) == 36);
  for (std::size_t k = 1; k <= 9; ++k) CHECK(adversarial_vote_bound(10, 0, k) == 0);
  CHECK_THROWS_AS(adversarial_vote_bound(10, 10, 1), InvalidRange);
  CHECK_THROWS_AS(adversarial_vote_bound(10, 1, 0), InvalidRange);
}

TEST_CASE("partial sample probability, discrete") {
  CHECK(partial_sample_prob_discrete_exact(9, 2, 2, 1, 1) == Rational(15, 28));
  CHECK(partial_sample_prob_discrete_exact(9, 2, 2, 28, 14) == 1);  // 14 > 13
  CHECK(partial_sample_prob_discrete_exact(9, 2, 2, 5, 0) == 0);
  CHECK_THROWS_AS(partial_sample_prob_discrete_exact(9, 2, 2, 5, 6), InvalidRange);
  CHECK_THROWS_AS(partial_sample_prob_discrete_exact(9, 2, 2, 29, 1), InvalidRange);
}

TEST_CASE("partial sample probability, continuous") {
  CHECK(partial_sample_prob_continuous_exact(9, 2, 2, 28) == 1);
  CHECK(partial_sample_prob_continuous_exact(9, 2, 2, 1) == Rational(15, 28));
  CHECK(partial_sample_prob_continuous_exact(9, 2, 2, 2) ==
        Rational(oracle::choose(15, 2), oracle::choose(28, 2)));
  CHECK(partial_sample_prob_continuous_exact(10, 2, 2, 2) ==
        Rational(oracle::choose(21, 2), oracle::choose(36, 2)));
  CHECK_THROWS_AS(partial_sample_prob_continuous_exact(9, 2, 3, 1), ConditionViolated);
  CHECK_THROWS_AS(partial_sample_prob_continuous_exact(9, 2, 2, 0), InvalidRange);
}

TEST_CASE("float wrappers stay within 1e-12 of the exact value") {
  for (std::uint64_t D = 1; D <= 36; ++D) {
    const Rational q = partial_sample_prob_continuous_exact(10, 2, 2, D);
    const double f = partial_sample_prob_continuous(10, 2, 2, D);
    CHECK(std::abs(to_double(q) - f) < 1e-12);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    for (std::uint64_t u = 0; u <= D; ++u) {
      const double g = partial_sample_prob_discrete(10, 2, 2, D, u);
      CHECK(std::abs(to_double(partial_sample_prob_discrete_exact(10, 2, 2, D, u)) - g) < 1e-12);
    }
  }
}

TEST_CASE("k = 1 is feasible whenever the assumption holds") {
  for (std::size_t N = 2; N <= 64; ++N) {
    for (std::size_t C = 0; 2 * C + 1 < N; ++C) REQUIRE(dominating_benign_holds(N, C, 1));
  }
}

TEST_CASE("downward closure in k") {
  for (std::size_t N = 2; N <= 48; ++N) {
    for (std::size_t C = 0; C <= N - 1; ++C) {
      bool seen_false = false;
      for (std::size_t k = 1; k <= N - 1; ++k) {
        const bool ok = dominating_benign_holds(N, C, k);
        REQUIRE_FALSE((ok && seen_false));
        seen_false = seen_false || !ok;
      }
    }
  }
}

TEST_CASE("contamination rate grows with k") {
  for (std::size_t N = 3; N <= 40; ++N) {
    for (std::size_t C = 1; C + 2 <= N; ++C) {
      Rational prev = -1;
      for (std::size_t k = 1; k + C + 1 <= N; ++k) {
        const Rational rate(adversarial_vote_bound(N, C, k), binomial(N - 1, k));
        REQUIRE(rate >= prev);
        prev = rate;
      }
    }
  }
}

// Every configuration with n1 <= 20: both formulas against exhaustive subset counts.
TEST_CASE("hypergeometric formulas match exhaustive enumeration") {
  std::size_t configs = 0;
  for (unsigned N = 2; N <= 21; ++N) {
    for (unsigned k = 1; k <= N - 1; ++k) {
      const unsigned n1 = static_cast<unsigned>(oracle::choose(N - 1, k));
      if (n1 > 20) continue;
      for (unsigned C = 0; C <= N - 1; ++C) {
        const unsigned n2 = static_cast<unsigned>(oracle::choose(N - 1 - C, k));
        const auto hist = oracle::tainted_histogram(n1, n1 - n2);
        const bool cond2 = 2 * n2 > n1;
        for (unsigned D = 1; D <= n1; ++D) {
          ++configs;
          const Rational total(static_cast<long long>(oracle::choose(n1, D)));
          if (cond2) {
            std::uint64_t hits = 0;
            for (unsigned j = 0; j <= D; ++j) {
              if (2 * (D - j) > D) hits += hist[D][j];  // benign draws exceed D/2
            }
            REQUIRE(partial_sample_prob_continuous_exact(N, C, k, D) == Rational(hits) / total);
          } else {
            REQUIRE_THROWS_AS(partial_sample_prob_continuous_exact(N, C, k, D), ConditionViolated);
          }
          for (unsigned u = 0; u <= D; ++u) {
            Rational want = 1;
            if (u <= n1 - n2) {
              std::uint64_t hits = 0;
              for (unsigned j = 0; j < u; ++j) hits += hist[D][j];  // benign count >= D-(u-1)
              want = Rational(hits) / total;
            }
            REQUIRE(partial_sample_prob_discrete_exact(N, C, k, D, u) == want);
          }
        }
      }
    }
  }
  MESSAGE("configurations checked: " << configs);
}

TEST_CASE("continuous probability along odd D steps") {
  // Recorded, not asserted: D -> D+2 monotonicity over the small grid.
  std::ofstream artifact("continuous_pd_monotonicity.txt");
  std::size_t checked = 0, counterexamples = 0;
  for (unsigned N = 3; N <= 16; ++N) {
    for (unsigned k = 1; k <= N - 1; ++k) {
      const std::uint64_t n1 = oracle::choose(N - 1, k);
      if (n1 > 200) continue;
      for (unsigned C = 0; C <= N - 1; ++C) {
        if (!dominating_benign_holds(N, C, k)) continue;
        for (std::uint64_t D = 1; D + 2 <= n1; D += 2) {
          ++checked;
          if (partial_sample_prob_continuous_exact(N, C, k, D + 2) <
              partial_sample_prob_continuous_exact(N, C, k, D)) {
            ++counterexamples;
            artifact << "N=" << N << " C=" << C << " k=" << k << " D=" << D << "\n";
          }
        }
      }
    }
  }
  artifact << "checked " << checked << " counterexamples " << counterexamples << "\n";
  MESSAGE("odd-step monotonicity: " << counterexamples << " counterexamples in " << checked);
  CHECK(checked > 0);
}
