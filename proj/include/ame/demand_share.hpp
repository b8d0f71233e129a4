#pragma once

// Inventory restocking with shared demand observations. The victim restocks
// M products each step; the other agents broadcast the demand vectors they
// saw last step. Reward is -|| max(I + a, 0) - d ||_2.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "ame/environment.hpp"
#include "ame/policy.hpp"
#include "ame/rng.hpp"

namespace ame {

struct DemandShareParams {
  std::size_t n_agents = 10;
  std::size_t n_products = 3;
  std::size_t horizon = 50;
  double buyers = 300.0;
  /// Relative spread of per-agent demand around the episode mean.
  double demand_noise = 0.2;
};

class DemandShareEnv final : public Environment {
 public:
  explicit DemandShareEnv(DemandShareParams params);

  std::unique_ptr<Environment> clone() const override;
  void reset(std::uint64_t seed) override;

  /// Overrides the current state; shapes must match (others: N-1 rows).
  void set_state(std::vector<double> inventory, std::vector<double> own_last,
                 std::vector<std::vector<double>> others_last, std::vector<double> demand);

  std::size_t n_channels() const override { return params_.n_agents - 1; }
  std::size_t horizon() const override { return params_.horizon; }
  std::size_t step_index() const override { return t_; }
  bool done() const override { return done_; }

  /// Observation: inventory (M) followed by the victim's last demand (M).
  History history() const override;
  MessageSet benign_messages() const override;
  PayloadDomain payload_domain() const override;
  StepResult step(const Action& action) override;
  std::vector<double> state() const override;
  double reward_bound() const override;

  /// Reward the current state would pay for `restock`, without stepping.
  double reward_for(const std::vector<double>& restock) const;

  double mean_buyers_per_agent() const { return params_.buyers / static_cast<double>(params_.n_agents); }
  double capacity() const { return 2.0 * mean_buyers_per_agent(); }
  double max_demand() const { return mean_buyers_per_agent() * (1.0 + params_.demand_noise); }
  /// Restock actions are clipped to [-capacity, capacity] per product.
  double max_restock() const { return capacity(); }

  const DemandShareParams& params() const noexcept { return params_; }
  const std::vector<double>& inventory() const noexcept { return inventory_; }
  const std::vector<double>& demand() const noexcept { return demand_; }

 private:
  void draw_demands();
  std::vector<double> stock_after(const std::vector<double>& restock) const;

  DemandShareParams params_;
  Rng rng_;
  std::vector<double> mean_demand_;
  std::vector<double> inventory_;
  std::vector<double> own_last_;
  std::vector<std::vector<double>> others_last_;
  std::vector<double> demand_;                      // victim, this step
  std::vector<std::vector<double>> others_demand_;  // others, this step
  std::size_t t_ = 0;
  bool done_ = false;
};

/// Scripted base policy: restock to the mean of the victim's own last demand
/// and the sampled demand messages, a = mean - I, clipped to the action box.
class DemandSharePolicy final : public AblationPolicy {
 public:
  DemandSharePolicy(std::size_t n_products, double max_restock)
      : n_products_(n_products), max_restock_(max_restock) {}

  ActionKind action_kind() const override { return ActionKind::continuous; }
  std::size_t action_size() const override { return n_products_; }
  Action act(const History& history, const KSampleView& sample) const override;

 private:
  std::size_t n_products_;
  double max_restock_;
};

}  // namespace ame
