#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace toolpose {

// Raised when arguments violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a file does not follow its documented format. Carries the
// source name and the byte offset at which parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string source, std::uint64_t offset, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(offset) + ": " + what),
        source_(std::move(source)),
        offset_(offset) {}

  const std::string& source() const noexcept { return source_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string source_;
  std::uint64_t offset_;
};

}  // namespace toolpose
