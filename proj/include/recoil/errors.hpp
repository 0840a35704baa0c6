#pragma once

#include <stdexcept>
#include <string>

namespace recoil {

// Process exit codes used by the command-line front end.
enum class ErrorCode : int {
  ok = 0,
  config = 2,
  degeneracy = 3,
  budget = 4,
};

std::string to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Invalid parameters, grids or configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

/// Numerically degenerate input: trapped (identically zero) amplitude, pole on the
/// grid, empty conditional slice, or a failed eigensolver.
class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& what) : Error(ErrorCode::degeneracy, what) {}
};

/// Grid or decomposition exceeding the configured memory budget.
class BudgetError : public Error {
 public:
  explicit BudgetError(const std::string& what) : Error(ErrorCode::budget, what) {}
};

}  // namespace recoil
