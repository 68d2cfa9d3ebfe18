#pragma once

#include <stdexcept>
#include <string>

namespace tlswim {

// Base class for every error raised by the library. The CLI maps subclasses
// onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Raised when a PPO update produces a non-finite loss or ratio. Parameters
// are restored to their pre-update values before this propagates.
class DivergedUpdateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, int line)
      : Error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace tlswim
