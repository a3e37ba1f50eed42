#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmteleop/action.hpp"

namespace mmteleop {

/// Which device drives each body part. Parts without an owner are left
/// absent in merged commands.
class Assignment {
 public:
  Assignment() = default;

  /// Throws ConfigError if `part` already has a different owner.
  void assign(BodyPart part, const std::string& device_id);
  const std::string* owner(BodyPart part) const;
  const std::map<BodyPart, std::string>& table() const noexcept { return owners_; }

  /// Single device owning every part.
  static Assignment all_to(const std::string& device_id);

 private:
  std::map<BodyPart, std::string> owners_;
};

struct DeviceClaim {
  std::string device_id;
  std::set<BodyPart> capabilities;
  /// Parts requested in the session config; empty means "whatever I can do".
  std::set<BodyPart> requested;
  int config_line = 0;
};

/// Resolves the assignment table at session start. Explicit requests win; a
/// part claimed explicitly by two devices, requested from a device that
/// cannot produce it, or implicitly claimable by several devices with no
/// explicit owner is a ConfigError.
Assignment resolve_assignment(const std::vector<DeviceClaim>& claims);

/// Merges one tick of partials. Each field comes from its owner's partial if
/// present; fields from other devices are discarded.
ActionCommand composite_merge(const std::vector<PartialCommand>& partials, const Assignment& assignment,
                              TimestampUs now);

}  // namespace mmteleop
