#pragma once

// Grid food-finding environment. The victim walks an W x H grid with 8-way
// moves; N-1 scouts each report where the food is. Every step costs -0.5
// until the food cell is reached.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "ame/environment.hpp"
#include "ame/policy.hpp"
#include "ame/rng.hpp"

namespace ame {

enum class ReportNoise {
  none,     // every scout reports the exact food cell
  bounded,  // each scout carries a fixed per-episode bias in [-scale, scale]^2
};

struct GridFoodParams {
  std::size_t width = 9;
  std::size_t height = 9;
  std::size_t n_agents = 9;
  std::size_t horizon = 30;
  ReportNoise noise = ReportNoise::none;
  double noise_scale = 1.0;
};

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

class GridFoodEnv final : public Environment {
 public:
  static constexpr std::size_t kActionCount = 9;
  static constexpr double kStepPenalty = -0.5;

  explicit GridFoodEnv(GridFoodParams params);

  /// Action id for a move; dx, dy in {-1, 0, 1}. (0, 0) is "stay".
  static std::size_t action_id(int dx, int dy);
  static std::pair<int, int> action_delta(std::size_t id);

  std::unique_ptr<Environment> clone() const override;
  void reset(std::uint64_t seed) override;
  /// Starts an episode from explicit positions (offsets stay as drawn).
  void place(Cell victim, Cell food);
  void set_offsets(std::vector<std::array<double, 2>> offsets);

  std::size_t n_channels() const override { return params_.n_agents - 1; }
  std::size_t horizon() const override { return params_.horizon; }
  std::size_t step_index() const override { return t_; }
  bool done() const override { return done_; }

  History history() const override;
  MessageSet benign_messages() const override;
  PayloadDomain payload_domain() const override;
  StepResult step(const Action& action) override;
  std::vector<double> state() const override;
  double reward_bound() const override { return -kStepPenalty; }

  const GridFoodParams& params() const noexcept { return params_; }
  Cell victim() const noexcept { return victim_; }
  Cell food() const noexcept { return food_; }

 private:
  GridFoodParams params_;
  Cell victim_;
  Cell food_;
  std::vector<std::array<double, 2>> offsets_;
  std::size_t t_ = 0;
  bool done_ = false;
};

enum class ReportAggregate { median, mean };

/// Scripted base policy: step toward the aggregate (coordinate-wise median by
/// default) of the sampled food reports; an axis stays put when the target is
/// within half a cell.
class GridFoodPolicy final : public AblationPolicy {
 public:
  explicit GridFoodPolicy(ReportAggregate aggregate = ReportAggregate::median)
      : aggregate_(aggregate) {}

  ActionKind action_kind() const override { return ActionKind::discrete; }
  std::size_t action_size() const override { return GridFoodEnv::kActionCount; }
  Action act(const History& history, const KSampleView& sample) const override;

 private:
  ReportAggregate aggregate_;
};

}  // namespace ame
