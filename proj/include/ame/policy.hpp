#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "ame/certmath.hpp"
#include "ame/message.hpp"

namespace ame {

/// Base (message-ablation) policy: a deterministic map from history and one
/// k-sample to an action. Implementations must be symmetric in the k
/// messages and safe to evaluate concurrently.
class AblationPolicy {
 public:
  virtual ~AblationPolicy() = default;

  virtual ActionKind action_kind() const = 0;
  /// |A| for discrete policies, the action dimension L for continuous ones.
  virtual std::size_t action_size() const = 0;
  virtual Action act(const History& history, const KSampleView& sample) const = 0;
};

/// Adapter for lambdas; mostly used by tests and the oracle instances.
class FunctionPolicy final : public AblationPolicy {
 public:
  using Fn = std::function<Action(const History&, const KSampleView&)>;

  FunctionPolicy(ActionKind kind, std::size_t action_size, Fn fn)
      : kind_(kind), size_(action_size), fn_(std::move(fn)) {}

  ActionKind action_kind() const override { return kind_; }
  std::size_t action_size() const override { return size_; }
  Action act(const History& history, const KSampleView& sample) const override {
    return fn_(history, sample);
  }

 private:
  ActionKind kind_;
  std::size_t size_;
  Fn fn_;
};

}  // namespace ame
