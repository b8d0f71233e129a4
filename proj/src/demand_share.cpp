#include "ame/demand_share.hpp"

#include <algorithm>
#include <cmath>

#include "ame/errors.hpp"

namespace ame {

DemandShareEnv::DemandShareEnv(DemandShareParams params) : params_(params) {
  if (params_.n_agents < 2) throw InvalidRange("DemandShare needs N >= 2");
  if (params_.n_products < 1) throw InvalidRange("DemandShare needs M >= 1");
  if (params_.horizon < 1) throw InvalidRange("horizon must be >= 1");
  if (params_.buyers <= 0.0) throw InvalidRange("buyer count must be positive");
  if (params_.demand_noise < 0.0 || params_.demand_noise > 1.0) {
    throw InvalidRange("demand noise must lie in [0, 1]");
  }
  const std::size_t m = params_.n_products;
  mean_demand_.assign(m, mean_buyers_per_agent() / static_cast<double>(m));
  inventory_.assign(m, 0.0);
  own_last_.assign(m, 0.0);
  demand_.assign(m, 0.0);
  others_last_.assign(n_channels(), std::vector<double>(m, 0.0));
  others_demand_ = others_last_;
}

std::unique_ptr<Environment> DemandShareEnv::clone() const {
  return std::make_unique<DemandShareEnv>(*this);
}

void DemandShareEnv::draw_demands() {
  auto draw = [&](std::vector<double>& d) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      d[j] = mean_demand_[j] * (1.0 + params_.demand_noise * (2.0 * rng_.uniform01() - 1.0));
    }
  };
  draw(demand_);
  for (auto& d : others_demand_) draw(d);
}

void DemandShareEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  const std::size_t m = params_.n_products;
  // Episode-level product mix: a uniform point on the simplex.
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    mean_demand_[j] = -std::log(1.0 - rng_.uniform01());
    total += mean_demand_[j];
  }
  for (double& mu : mean_demand_) mu = mean_buyers_per_agent() * mu / total;
  for (double& x : inventory_) x = rng_.uniform(0.0, mean_buyers_per_agent());
  draw_demands();
  own_last_ = demand_;
  others_last_ = others_demand_;
  draw_demands();
  t_ = 0;
  done_ = false;
}

void DemandShareEnv::set_state(std::vector<double> inventory, std::vector<double> own_last,
                               std::vector<std::vector<double>> others_last,
                               std::vector<double> demand) {
  const std::size_t m = params_.n_products;
  if (inventory.size() != m || own_last.size() != m || demand.size() != m) {
    throw DimensionMismatch("DemandShare state vectors must have M entries");
  }
  if (others_last.size() != n_channels()) throw DimensionMismatch("one demand row per channel");
  for (const auto& row : others_last) {
    if (row.size() != m) throw DimensionMismatch("DemandShare demand rows must have M entries");
  }
  inventory_ = std::move(inventory);
  own_last_ = std::move(own_last);
  others_last_ = std::move(others_last);
  demand_ = std::move(demand);
}

History DemandShareEnv::history() const {
  History h{t_, inventory_};
  h.observation.insert(h.observation.end(), own_last_.begin(), own_last_.end());
  return h;
}

MessageSet DemandShareEnv::benign_messages() const { return MessageSet::from_payloads(others_last_); }

PayloadDomain DemandShareEnv::payload_domain() const {
  return PayloadDomain::box(std::vector<double>(params_.n_products, 0.0),
                            std::vector<double>(params_.n_products, max_demand()));
}

std::vector<double> DemandShareEnv::stock_after(const std::vector<double>& restock) const {
  if (restock.size() != params_.n_products) throw DimensionMismatch("restock must have M entries");
  std::vector<double> stock(restock.size());
  for (std::size_t j = 0; j < stock.size(); ++j) {
    const double a = std::clamp(restock[j], -max_restock(), max_restock());
    stock[j] = std::max(inventory_[j] + a, 0.0);
  }
  return stock;
}

double DemandShareEnv::reward_for(const std::vector<double>& restock) const {
  const auto stock = stock_after(restock);
  double sq = 0.0;
  for (std::size_t j = 0; j < stock.size(); ++j) sq += (stock[j] - demand_[j]) * (stock[j] - demand_[j]);
  return -std::sqrt(sq);
}

StepResult DemandShareEnv::step(const Action& action) {
  if (done_) throw EpisodeFinished("DemandShare episode already finished");
  if (action.is_discrete()) throw DimensionMismatch("DemandShare takes continuous actions");
  const auto stock = stock_after(action.vec());
  const double reward = reward_for(action.vec());
  for (std::size_t j = 0; j < stock.size(); ++j) {
    inventory_[j] = std::min(std::max(stock[j] - demand_[j], 0.0), capacity());
  }
  own_last_ = demand_;
  others_last_ = others_demand_;
  ++t_;
  done_ = t_ >= params_.horizon;
  if (!done_) draw_demands();
  return StepResult{history(), reward, done_};
}

std::vector<double> DemandShareEnv::state() const {
  // The generator state is left out: clones taken at the same step draw the
  // same future demands, so these fields decide what happens next.
  std::vector<double> s = inventory_;
  auto append = [&](const std::vector<double>& v) { s.insert(s.end(), v.begin(), v.end()); };
  append(own_last_);
  for (const auto& row : others_last_) append(row);
  append(demand_);
  for (const auto& row : others_demand_) append(row);
  append(mean_demand_);
  s.push_back(static_cast<double>(t_));
  s.push_back(done_ ? 1.0 : 0.0);
  return s;
}

double DemandShareEnv::reward_bound() const {
  return std::sqrt(static_cast<double>(params_.n_products)) *
         std::max(capacity() + max_restock(), max_demand());
}

Action DemandSharePolicy::act(const History& history, const KSampleView& sample) const {
  const std::size_t m = n_products_;
  if (history.observation.size() != 2 * m) throw DimensionMismatch("DemandShare observation is 2M wide");
  std::vector<double> a(m);
  std::vector<double> values(sample.size() + 1);
  for (std::size_t j = 0; j < m; ++j) {
    values[0] = history.observation[m + j];
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const Payload& p = sample.payload(i);
      if (p.size() != m) throw DimensionMismatch("demand message must have M entries");
      values[i + 1] = p[j];
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double target = sum / static_cast<double>(values.size());
    a[j] = std::clamp(target - history.observation[j], -max_restock_, max_restock_);
  }
  return Action::continuous(std::move(a));
}

}  // namespace ame
