#pragma once

#include <stdexcept>
#include <string>

namespace cpprop {

/// Invalid input or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the domain of an analytic formula.
class DomainError : public ConfigError {
 public:
  explicit DomainError(const std::string& what) : ConfigError(what) {}
};

/// Integration failure: norm drift, non-finite values (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// File system or format failure (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cpprop
