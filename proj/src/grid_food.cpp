#include "ame/grid_food.hpp"

#include <algorithm>
#include <cmath>

#include "ame/errors.hpp"

namespace ame {
namespace {

int clamp_cell(int v, std::size_t extent) {
  return std::clamp(v, 0, static_cast<int>(extent) - 1);
}

int step_toward(double d) {
  if (std::abs(d) < 0.5) return 0;
  return d > 0 ? 1 : -1;
}

}  // namespace

GridFoodEnv::GridFoodEnv(GridFoodParams params) : params_(params) {
  if (params_.width < 1 || params_.height < 1) throw InvalidRange("grid must be at least 1x1");
  if (params_.width * params_.height < 2) throw InvalidRange("grid needs room for victim and food");
  if (params_.n_agents < 2) throw InvalidRange("GridFood needs N >= 2");
  if (params_.horizon < 1) throw InvalidRange("horizon must be >= 1");
  if (params_.noise_scale < 0.0) throw InvalidRange("noise scale must be >= 0");
  offsets_.assign(params_.n_agents - 1, {0.0, 0.0});
}

std::size_t GridFoodEnv::action_id(int dx, int dy) {
  if (dx < -1 || dx > 1 || dy < -1 || dy > 1) throw InvalidRange("move delta outside {-1,0,1}");
  return static_cast<std::size_t>((dx + 1) * 3 + (dy + 1));
}

std::pair<int, int> GridFoodEnv::action_delta(std::size_t id) {
  if (id >= kActionCount) throw InvalidRange("GridFood action id out of range");
  return {static_cast<int>(id / 3) - 1, static_cast<int>(id % 3) - 1};
}

std::unique_ptr<Environment> GridFoodEnv::clone() const { return std::make_unique<GridFoodEnv>(*this); }

void GridFoodEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  const std::uint64_t cells = params_.width * params_.height;
  const std::uint64_t v = rng.uniform_index(cells);
  std::uint64_t f = rng.uniform_index(cells - 1);
  if (f >= v) ++f;
  for (auto& o : offsets_) {
    if (params_.noise == ReportNoise::bounded) {
      o[0] = rng.uniform(-params_.noise_scale, params_.noise_scale);
      o[1] = rng.uniform(-params_.noise_scale, params_.noise_scale);
    } else {
      o = {0.0, 0.0};
    }
  }
  place(Cell{static_cast<int>(v % params_.width), static_cast<int>(v / params_.width)},
        Cell{static_cast<int>(f % params_.width), static_cast<int>(f / params_.width)});
}

void GridFoodEnv::place(Cell victim, Cell food) {
  auto inside = [&](Cell c) {
    return c.x >= 0 && c.y >= 0 && c.x < static_cast<int>(params_.width) &&
           c.y < static_cast<int>(params_.height);
  };
  if (!inside(victim) || !inside(food)) throw InvalidRange("cell outside the grid");
  victim_ = victim;
  food_ = food;
  t_ = 0;
  done_ = victim_ == food_;
}

void GridFoodEnv::set_offsets(std::vector<std::array<double, 2>> offsets) {
  if (offsets.size() != n_channels()) throw DimensionMismatch("one offset per scout expected");
  offsets_ = std::move(offsets);
}

History GridFoodEnv::history() const {
  return History{t_, {static_cast<double>(victim_.x), static_cast<double>(victim_.y)}};
}

MessageSet GridFoodEnv::benign_messages() const {
  std::vector<Payload> reports;
  reports.reserve(offsets_.size());
  for (const auto& o : offsets_) {
    reports.push_back({food_.x + o[0], food_.y + o[1]});
  }
  return MessageSet::from_payloads(std::move(reports));
}

PayloadDomain GridFoodEnv::payload_domain() const {
  return PayloadDomain::box({0.0, 0.0}, {static_cast<double>(params_.width - 1),
                                         static_cast<double>(params_.height - 1)});
}

StepResult GridFoodEnv::step(const Action& action) {
  if (done_) throw EpisodeFinished("GridFood episode already finished");
  if (!action.is_discrete()) throw DimensionMismatch("GridFood takes discrete actions");
  const auto [dx, dy] = action_delta(action.id());
  victim_.x = clamp_cell(victim_.x + dx, params_.width);
  victim_.y = clamp_cell(victim_.y + dy, params_.height);
  ++t_;
  done_ = victim_ == food_ || t_ >= params_.horizon;
  return StepResult{history(), kStepPenalty, done_};
}

std::vector<double> GridFoodEnv::state() const {
  std::vector<double> s{static_cast<double>(victim_.x), static_cast<double>(victim_.y),
                        static_cast<double>(food_.x), static_cast<double>(food_.y),
                        static_cast<double>(t_), done_ ? 1.0 : 0.0};
  for (const auto& o : offsets_) {
    s.push_back(o[0]);
    s.push_back(o[1]);
  }
  return s;
}

Action GridFoodPolicy::act(const History& history, const KSampleView& sample) const {
  if (history.observation.size() != 2) throw DimensionMismatch("GridFood observation is (x, y)");
  if (sample.size() == 0) throw InvalidRange("empty k-sample");
  int move[2];
  std::vector<double> values(sample.size());
  for (std::size_t axis = 0; axis < 2; ++axis) {
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const Payload& p = sample.payload(i);
      if (p.size() != 2) throw DimensionMismatch("GridFood report is (x, y)");
      values[i] = p[axis];
    }
    // Sorting first keeps the result independent of message order.
    std::sort(values.begin(), values.end());
    double target;
    if (aggregate_ == ReportAggregate::mean) {
      double sum = 0.0;
      for (double v : values) sum += v;
      target = sum / static_cast<double>(values.size());
    } else {
      const std::size_t n = values.size();
      target = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
    move[axis] = step_toward(target - history.observation[axis]);
  }
  return Action::discrete(GridFoodEnv::action_id(move[0], move[1]));
}

}  // namespace ame
