#pragma once

#include <stdexcept>
#include <string>

namespace hpi {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration (missing keys, inconsistent settings). CLI exit 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad or inconsistent input data (schema problems, shape mismatches,
// unidentifiable fits). CLI exit 3.
class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// Numerical failure after stabilization retries. CLI exit 4.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg, int time_step = -1)
      : Error(time_step >= 0 ? msg + " (t=" + std::to_string(time_step) + ")"
                             : msg),
        time_step_(time_step) {}
  int time_step() const { return time_step_; }

 private:
  int time_step_;
};

}  // namespace hpi
