#pragma once

#include <stdexcept>
#include <string>

namespace nntopo {

/// Base class for every error raised by the library. `exit_code()` is the
/// process status the CLI reports for it: 1 for validation and numeric
/// failures, 2 for usage and I/O problems.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const noexcept { return 1; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Malformed file contents (bad magic, truncated payload).
class FormatError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Network spec / weights / record do not fit together.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must agree (counts, universes) do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace nntopo
