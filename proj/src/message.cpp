#include "ame/message.hpp"

#include <algorithm>
#include <cstdio>

namespace ame {

MessageSet MessageSet::from_payloads(std::vector<Payload> payloads) {
  MessageSet set;
  set.messages.reserve(payloads.size());
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    set.messages.push_back(Message{std::move(payloads[i]), i});
  }
  set.tamper_mask.assign(set.messages.size(), false);
  return set;
}

std::size_t MessageSet::tampered_count() const noexcept {
  return static_cast<std::size_t>(std::count(tamper_mask.begin(), tamper_mask.end(), true));
}

MessageSet MessageSet::with_payload(std::size_t channel, Payload payload) const {
  MessageSet out = *this;
  out.messages.at(channel).payload = std::move(payload);
  out.tamper_mask.at(channel) = true;
  return out;
}

std::vector<double> Action::embed(std::size_t n_actions) const {
  if (!is_discrete()) return vec();
  std::vector<double> out(n_actions, 0.0);
  out.at(id()) = 1.0;
  return out;
}

std::string Action::to_string() const {
  if (is_discrete()) return std::to_string(id());
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < vec().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", vec()[i]);
    if (i) out += ';';
    out += buf;
  }
  return out;
}

}  // namespace ame
