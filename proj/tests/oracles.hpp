#pragma once

// Brute-force reference implementations. Deliberately naive and separate
// from the library code paths they check.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "ame/message.hpp"
#include "ame/policy.hpp"

namespace oracle {

/// Pascal's triangle up to n = 66 in 64-bit integers; small r beyond that.
inline std::uint64_t choose(unsigned n, unsigned r) {
  static const auto table = [] {
    std::vector<std::vector<std::uint64_t>> t(67, std::vector<std::uint64_t>(67, 0));
    for (unsigned i = 0; i <= 66; ++i) {
      t[i][0] = 1;
      for (unsigned j = 1; j <= i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
    }
    return t;
  }();
  if (r > n) return 0;
  if (n <= 66) return table[n][r];
  if (r > n - r) r = n - r;
  unsigned __int128 v = 1;
  for (unsigned i = 0; i < r; ++i) v = v * (n - i) / (i + 1);
  return static_cast<std::uint64_t>(v);
}

/// Product form of the dominating-benign condition:
/// (N-k-1)...(N-k-C) > 1/2 (N-1)...(N-C), in 128-bit integers.
inline bool product_condition(unsigned N, unsigned C, unsigned k) {
  if (k + C > N - 1) return false;
  unsigned __int128 lhs = 2, rhs = 1;
  for (unsigned i = 1; i <= C; ++i) {
    lhs *= (N - k - i);
    rhs *= (N - i);
    const auto g = std::gcd(lhs, rhs);
    lhs /= g;
    rhs /= g;
    if (lhs <= rhs) return false;  // every factor is below 1
  }
  return lhs > rhs;
}

inline std::optional<unsigned> max_k(unsigned N, unsigned C) {
  std::optional<unsigned> best;
  for (unsigned k = 1; k <= N - 1; ++k) {
    if (product_condition(N, C, k)) best = k;
  }
  return best;
}

/// All k-subsets of {0..n-1} as bitmasks, ascending numeric order.
inline std::vector<std::uint64_t> subsets(unsigned n, unsigned k) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    if (static_cast<unsigned>(std::popcount(m)) == k) out.push_back(m);
  }
  return out;
}

inline std::vector<std::size_t> members(std::uint64_t mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; mask; ++i, mask >>= 1) {
    if (mask & 1) out.push_back(i);
  }
  return out;
}

/// Vote tally of `policy` over every k-subset of the message set.
inline std::map<std::size_t, std::uint64_t> tally(const ame::AblationPolicy& policy,
                                                  const ame::History& h,
                                                  const ame::MessageSet& msgs, unsigned k) {
  std::map<std::size_t, std::uint64_t> votes;
  for (auto m : subsets(static_cast<unsigned>(msgs.size()), k)) {
    const auto idx = members(m);
    ++votes[policy.act(h, ame::KSampleView(msgs, idx)).id()];
  }
  return votes;
}

inline std::size_t plurality(const std::map<std::size_t, std::uint64_t>& votes) {
  std::size_t best = 0;
  std::uint64_t top = 0;
  for (const auto& [id, n] : votes) {
    if (n > top) best = id, top = n;  // map order: first hit is the lowest id
  }
  return best;
}

/// Median by full sort of each coordinate.
inline std::vector<double> sort_median(const std::vector<std::vector<double>>& vs) {
  std::vector<double> out(vs.at(0).size());
  for (std::size_t l = 0; l < out.size(); ++l) {
    std::vector<double> col;
    for (const auto& v : vs) col.push_back(v[l]);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    out[l] = n % 2 ? col[n / 2] : (col[n / 2 - 1] + col[n / 2]) / 2;
  }
  return out;
}

inline std::vector<double> continuous_ensemble(const ame::AblationPolicy& policy, const ame::History& h,
                                               const ame::MessageSet& msgs, unsigned k) {
  std::vector<std::vector<double>> acts;
  for (auto m : subsets(static_cast<unsigned>(msgs.size()), k)) {
    const auto idx = members(m);
    acts.push_back(policy.act(h, ame::KSampleView(msgs, idx)).vec());
  }
  return sort_median(acts);
}

/// hist[D][j]: number of D-subsets of n1 items, the first `bad` of them
/// tainted, that contain exactly j tainted items. Walks all 2^n1 subsets.
inline std::vector<std::vector<std::uint64_t>> tainted_histogram(unsigned n1, unsigned bad) {
  std::vector<std::vector<std::uint64_t>> hist(n1 + 1, std::vector<std::uint64_t>(n1 + 1, 0));
  const std::uint64_t bad_mask = bad ? ((std::uint64_t{1} << bad) - 1) : 0;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n1); ++m) {
    ++hist[std::popcount(m)][std::popcount(m & bad_mask)];
  }
  return hist;
}

}  // namespace oracle
