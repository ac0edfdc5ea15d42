#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace sbss {

/// Numeric or model failure (degenerate scatter, non-SPD whitening, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed external input (CSV schema, config file, CLI arguments).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

template <typename... Args>
std::string str(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail
}  // namespace sbss
