#pragma once

#include <stdexcept>
#include <string>

namespace vqm {

// Raised when an input lies outside an operation's mathematical domain or
// violates a data invariant. The CLI maps it to exit code 1.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised for unreadable files and malformed input rows. The CLI maps it to
// exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vqm
