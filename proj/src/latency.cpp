#include "mmteleop/latency.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmteleop/errors.hpp"

namespace mmteleop {

void LatencyModel::validate() const {
  if (!(base_delay_ms >= 0.0) || !(jitter_ms >= 0.0)) throw ConfigError("latency delays must be non-negative");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw ConfigError("drop probability must be in [0,1]");
  }
}

LatencyModel LatencyModel::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) {
    throw ConfigError("latency must be \"base_ms,jitter_ms,drop_probability[,seed]\"");
  }
  LatencyModel m;
  try {
    m.base_delay_ms = std::stod(parts[0]);
    m.jitter_ms = std::stod(parts[1]);
    m.drop_probability = std::stod(parts[2]);
    if (parts.size() == 4) m.seed = std::stoull(parts[3]);
  } catch (const std::exception&) {
    throw ConfigError("latency: cannot parse \"" + text + "\"");
  }
  m.validate();
  return m;
}

DelaySampler::DelaySampler(const LatencyModel& model) : model_(model), rng_(model.seed) { model_.validate(); }

double DelaySampler::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

std::optional<TimestampUs> DelaySampler::schedule(TimestampUs send_us) {
  if (model_.drop_probability > 0.0 && uniform() < model_.drop_probability) {
    ++dropped_;
    return std::nullopt;
  }
  double delay_ms = model_.base_delay_ms;
  if (model_.jitter_ms > 0.0) delay_ms += (2.0 * uniform() - 1.0) * model_.jitter_ms;
  const TimestampUs at = send_us + std::llround(std::max(0.0, delay_ms) * 1000.0);
  last_delivery_ = std::max(last_delivery_, at);
  return last_delivery_;
}

}  // namespace mmteleop
