#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace multisle {

/// Precondition violated by the caller (bad κ, unordered points, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation left its region of numerical validity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A collision log that cannot come from a consistent non-crossing evolution.
class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aggregate Monte-Carlo failure (too many numerically failed samples).
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected; carries every violated constraint.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace multisle
