#pragma once

#include <stdexcept>
#include <string>

namespace ltsg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (zero radius, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// VNB frame requested for a degenerate chief state.
class FrameError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrbitError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state encountered while integrating.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time)
      : Error(what + " (t=" + std::to_string(time) + " s)"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Riccati / gain computation failure.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Malformed model interchange file. `field()` holds the JSON path.
class ModelFormatError : public Error {
 public:
  ModelFormatError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

}  // namespace ltsg
