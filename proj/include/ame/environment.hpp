#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "ame/message.hpp"

namespace ame {

/// Admissible payload region for attackers: a box, or a finite alphabet
/// when `alphabet` is non-empty.
struct PayloadDomain {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<Payload> alphabet;

  static PayloadDomain box(std::vector<double> lo, std::vector<double> hi);
  static PayloadDomain finite(std::vector<Payload> alphabet);

  bool is_finite() const noexcept { return !alphabet.empty(); }
  bool contains(const Payload& p) const;
};

struct StepResult {
  History history;
  double reward = 0.0;
  bool done = false;
};

/// Single-agent view of a desk-scale environment: the victim acts, the other
/// N-1 agents only show up as message channels. Deterministic given the
/// reset seed, and cheap to clone so attackers can roll models forward.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::unique_ptr<Environment> clone() const = 0;
  virtual void reset(std::uint64_t seed) = 0;

  virtual std::size_t n_channels() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual std::size_t step_index() const = 0;
  virtual bool done() const = 0;

  virtual History history() const = 0;
  /// Benign messages for the current step.
  virtual MessageSet benign_messages() const = 0;
  virtual PayloadDomain payload_domain() const = 0;

  /// Throws EpisodeFinished once done().
  virtual StepResult step(const Action& action) = 0;

  /// Full underlying state; equal vectors mean equal futures.
  virtual std::vector<double> state() const = 0;
  /// Upper bound on |reward| of a single step over all states and actions.
  virtual double reward_bound() const = 0;
};

}  // namespace ame
