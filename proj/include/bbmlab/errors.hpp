#pragma once

#include <stdexcept>
#include <string>

namespace bbmlab {

struct InvalidInputError : std::runtime_error {
  explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainTooSmallError : std::runtime_error {
  explicit DomainTooSmallError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-integrable blow-up in a kernel quadrature; carries the offending cell.
struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct WrongOperationError : std::runtime_error {
  explicit WrongOperationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bbmlab
