#pragma once

#include <stdexcept>
#include <string>

namespace ialpha {

enum class ErrorKind {
  kConfig,
  kData,
  kNumeric,
  kContract,
  kIncompatibleCheckpoint,
};

// Single exception type carrying a category; the CLI maps the category to an
// exit code (see ExitCodeFor).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& msg) { return {ErrorKind::kConfig, msg}; }
inline Error DataError(const std::string& msg) { return {ErrorKind::kData, msg}; }
inline Error NumericError(const std::string& msg) { return {ErrorKind::kNumeric, msg}; }
inline Error ContractError(const std::string& msg) { return {ErrorKind::kContract, msg}; }

// 0 success, 2 config error, 3 data error, 4 numeric failure.
inline int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kContract:
      return 2;
    case ErrorKind::kData:
    case ErrorKind::kIncompatibleCheckpoint:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
  }
  return 1;
}

}  // namespace ialpha
