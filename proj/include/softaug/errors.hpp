#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace softaug {

/// A caller broke an operation's precondition (bad index, out-of-range magnitude, shape mismatch).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration: malformed mapping tables, incomplete profiles, incompatible options.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the byte offset or line number that failed to parse.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t location)
      : std::runtime_error(what), location_(location) {}

  std::uint64_t location() const noexcept { return location_; }

 private:
  std::uint64_t location_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace softaug
