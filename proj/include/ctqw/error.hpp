#pragma once

#include <stdexcept>
#include <string>

namespace ctqw {

/// Error category; the numeric value doubles as the CLI exit code.
enum class ErrorKind : int {
  Config = 2,
  Numerical = 3,
  Guard = 4,
  Io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Short machine-readable tag, e.g. "no_transition".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string code = "invalid_config")
      : Error(ErrorKind::Config, std::move(code), message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message, std::string code = "numerical_failure")
      : Error(ErrorKind::Numerical, std::move(code), message) {}
};

class GuardExceeded : public Error {
 public:
  explicit GuardExceeded(const std::string& message)
      : Error(ErrorKind::Guard, "dense_guard_exceeded", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, "write_failure", message) {}
};

}  // namespace ctqw
