#pragma once

#include <stdexcept>
#include <string>

namespace dco {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or feature-layout violation (wrong vector length, unknown user
// feature, wrong number of user values).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Multi-value feature with no values.
class EmptyFeatureError : public Error {
 public:
  using Error::Error;
};

// Malformed snapshot / table / event / catalog file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ServingError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration. `field()` is a dotted path such as "p2d.beta".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace dco
