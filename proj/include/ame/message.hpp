#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ame {

/// Message contents. Environments use real vectors of a fixed dimension; the
/// symbolic oracle instances use one-element payloads holding a symbol id.
using Payload = std::vector<double>;

inline Payload symbol_payload(std::size_t symbol) { return {static_cast<double>(symbol)}; }

struct Message {
  Payload payload;
  std::size_t channel = 0;

  bool operator==(const Message&) const = default;
};

/// The N-1 messages a victim receives at one step, with the harness-side
/// record of which channels an attacker rewrote. Policies never see the mask.
struct MessageSet {
  std::vector<Message> messages;
  std::vector<bool> tamper_mask;

  /// Benign set with channel ids 0..n-1 and an all-false mask.
  static MessageSet from_payloads(std::vector<Payload> payloads);

  std::size_t size() const noexcept { return messages.size(); }
  std::size_t tampered_count() const noexcept;
  const Payload& payload(std::size_t channel) const { return messages.at(channel).payload; }

  /// Returns a copy with `channel` rewritten to `payload` and marked tampered.
  MessageSet with_payload(std::size_t channel, Payload payload) const;

  bool operator==(const MessageSet&) const = default;
};

/// Non-owning view of one k-sample: a message set plus the channel indices
/// that survive ablation. This is what a base policy consumes.
class KSampleView {
 public:
  KSampleView(const MessageSet& set, std::span<const std::size_t> indices)
      : set_(&set), indices_(indices) {}

  std::size_t size() const noexcept { return indices_.size(); }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t channel(std::size_t i) const { return indices_[i]; }
  const Payload& payload(std::size_t i) const { return set_->messages[indices_[i]].payload; }

 private:
  const MessageSet* set_;
  std::span<const std::size_t> indices_;
};

/// Owning k-sample returned by the enumeration / sampling operations.
struct KSample {
  std::vector<std::size_t> indices;  // strictly increasing
  std::vector<Payload> payloads;

  bool operator==(const KSample&) const = default;
};

class Action {
 public:
  Action() : value_(std::size_t{0}) {}

  static Action discrete(std::size_t id) { return Action(id); }
  static Action continuous(std::vector<double> v) { return Action(std::move(v)); }

  bool is_discrete() const noexcept { return std::holds_alternative<std::size_t>(value_); }
  std::size_t id() const { return std::get<std::size_t>(value_); }
  const std::vector<double>& vec() const { return std::get<std::vector<double>>(value_); }

  /// Discrete ids become one-hot vectors of length `n_actions`.
  std::vector<double> embed(std::size_t n_actions) const;

  std::string to_string() const;

  bool operator==(const Action&) const = default;

 private:
  explicit Action(std::size_t id) : value_(id) {}
  explicit Action(std::vector<double> v) : value_(std::move(v)) {}

  std::variant<std::size_t, std::vector<double>> value_;
};

/// Interaction history handed to base policies. Opaque to the ensemble layer;
/// environments decide what goes into `observation`.
struct History {
  std::size_t step = 0;
  std::vector<double> observation;

  bool operator==(const History&) const = default;
};

}  // namespace ame
