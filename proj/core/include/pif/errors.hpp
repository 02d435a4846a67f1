#pragma once

#include <stdexcept>
#include <string>

namespace pif {

/// Domain error thrown by library operations (bad input, violated precondition).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration error; the CLI maps this class to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace pif
