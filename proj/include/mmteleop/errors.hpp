#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmteleop {

/// Invalid session, keymap, embodiment or task configuration. Carries the
/// 1-based source line when the error can be attributed to one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Checksum, magic or structural failure while decoding bytes.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmteleop
