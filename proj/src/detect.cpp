#include "ame/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "ame/ensemble.hpp"
#include "ame/errors.hpp"

namespace ame {

std::vector<BiasScore> action_bias(const AblationPolicy& policy, const History& history,
                                   const MessageSet& msgs) {
  const std::size_t n = msgs.size();
  if (n < 3) throw InvalidRange("action bias needs at least 3 channels");
  const bool discrete = policy.action_kind() == ActionKind::discrete;
  std::vector<std::vector<double>> induced(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t idx[1] = {j};
    const Action a = policy.act(history, KSampleView(msgs, idx));
    induced[j] = discrete ? a.embed(policy.action_size()) : a.vec();
    if (induced[j].size() != induced[0].size()) throw DimensionMismatch("induced actions differ in size");
  }
  const std::vector<double> median = coordinate_median(induced);
  std::vector<BiasScore> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double beta = 0.0;
    for (std::size_t l = 0; l < median.size(); ++l) beta += std::abs(induced[j][l] - median[l]);
    out[j] = BiasScore{j, beta, 1};
  }
  return out;
}

void BiasAccumulator::add_step(std::span<const BiasScore> scores) {
  if (scores.size() != n_) throw DimensionMismatch("bias scores do not match the channel count");
  for (const auto& s : scores) step_sum_.at(s.channel) += s.beta;
  ++steps_;
}

void BiasAccumulator::end_episode() {
  if (steps_ == 0) return;
  for (std::size_t j = 0; j < n_; ++j) {
    episode_sum_[j] += step_sum_[j] / static_cast<double>(steps_);
    step_sum_[j] = 0.0;
  }
  steps_ = 0;
  ++episodes_;
}

std::vector<BiasScore> BiasAccumulator::average() const {
  std::vector<BiasScore> out(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    out[j] = BiasScore{j, episodes_ ? episode_sum_[j] / static_cast<double>(episodes_) : 0.0,
                       episodes_};
  }
  return out;
}

Recertification flag_and_recertify(std::span<const BiasScore> scores, std::size_t c,
                                   std::size_t n_agents, std::size_t n_adversaries) {
  if (c > scores.size()) throw InvalidRange("cannot flag more channels than were scored");
  if (n_agents < 2 || n_agents - 1 < c) throw InvalidRange("flag count exceeds N-1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].beta != scores[b].beta) return scores[a].beta > scores[b].beta;
    return scores[a].channel < scores[b].channel;
  });
  Recertification r;
  for (std::size_t i = 0; i < c; ++i) r.flagged.push_back(scores[order[i]].channel);
  r.previous_max_k = max_certifiable_k(n_agents, n_adversaries);
  const std::size_t remaining_adv = n_adversaries > c ? n_adversaries - c : 0;
  if (n_agents - c >= 2) r.new_max_k = max_certifiable_k(n_agents - c, remaining_adv);
  return r;
}

void write_bias_csv(std::ostream& out, std::span<const BiasScore> scores) {
  out << "channel,beta,episodes\n";
  char buf[32];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.10g", s.beta);
    out << s.channel << ',' << buf << ',' << s.episodes_averaged << '\n';
  }
}

}  // namespace ame
