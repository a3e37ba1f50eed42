#include "mmteleop/compositor.hpp"

#include "mmteleop/errors.hpp"

namespace mmteleop {

void Assignment::assign(BodyPart part, const std::string& device_id) {
  auto [it, inserted] = owners_.emplace(part, device_id);
  if (!inserted && it->second != device_id) {
    throw ConfigError(std::string(to_string(part)) + " assigned to both '" + it->second + "' and '" +
                      device_id + "'");
  }
}

const std::string* Assignment::owner(BodyPart part) const {
  auto it = owners_.find(part);
  return it == owners_.end() ? nullptr : &it->second;
}

Assignment Assignment::all_to(const std::string& device_id) {
  Assignment a;
  for (BodyPart p : kAllBodyParts) a.assign(p, device_id);
  return a;
}

Assignment resolve_assignment(const std::vector<DeviceClaim>& claims) {
  Assignment out;
  std::map<BodyPart, int> explicit_line;
  for (const DeviceClaim& c : claims) {
    for (BodyPart p : c.requested) {
      if (!c.capabilities.contains(p)) {
        throw ConfigError("device '" + c.device_id + "' cannot control " + to_string(p), c.config_line);
      }
      if (const std::string* prev = out.owner(p)) {
        throw ConfigError(std::string(to_string(p)) + " assigned to both '" + *prev + "' and '" + c.device_id + "'",
                          c.config_line);
      }
      out.assign(p, c.device_id);
      explicit_line[p] = c.config_line;
    }
  }

  for (BodyPart p : kAllBodyParts) {
    if (out.owner(p) != nullptr) continue;
    const DeviceClaim* implicit = nullptr;
    for (const DeviceClaim& c : claims) {
      if (!c.requested.empty() || !c.capabilities.contains(p)) continue;
      if (implicit != nullptr) {
        throw ConfigError("ambiguous assignment: " + std::string(to_string(p)) + " could come from '" +
                              implicit->device_id + "' or '" + c.device_id + "'",
                          c.config_line);
      }
      implicit = &c;
    }
    if (implicit != nullptr) out.assign(p, implicit->device_id);
  }
  return out;
}

ActionCommand composite_merge(const std::vector<PartialCommand>& partials, const Assignment& assignment,
                              TimestampUs now) {
  ActionCommand out;
  out.timestamp_us = now;
  for (BodyPart p : kAllBodyParts) {
    const std::string* owner = assignment.owner(p);
    if (owner == nullptr) continue;
    for (const PartialCommand& partial : partials) {
      const std::string* src = part_source(partial, p);
      if (src != nullptr && *src == *owner) {
        copy_part(partial, out, p);
        break;
      }
    }
  }
  return out;
}

}  // namespace mmteleop
