#pragma once

#include <stdexcept>
#include <string>

namespace cap {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivByZeroBox : public Error {
 public:
  DivByZeroBox() : Error("division by an interval box containing zero") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NewtonFailed : public Error {
 public:
  using Error::Error;
};

/// Radii-polynomial failure. `bound` names the offending bound
/// ("Y0", "Z0", "Z1", "Z2", "SingularApproxInverse", ...).
class ValidationFailed : public Error {
 public:
  ValidationFailed(std::string bound, const std::string& what)
      : Error(what), bound_(std::move(bound)) {}
  const std::string& bound() const noexcept { return bound_; }

 private:
  std::string bound_;
};

class ResonanceError : public Error {
 public:
  using Error::Error;
};

class ApproxFailed : public Error {
 public:
  using Error::Error;
};

class StepFailed : public Error {
 public:
  using Error::Error;
};

class NearBlowup : public Error {
 public:
  using Error::Error;
};

}  // namespace cap
