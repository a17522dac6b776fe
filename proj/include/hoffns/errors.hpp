#pragma once

#include <stdexcept>
#include <string>

namespace hoffns {

/// Argument outside the mathematical domain of an operation (negative density,
/// non-positive mollification width, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A requested variant is not implemented (e.g. an entropy index other than 2 or 3).
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical quadrature or iteration failed to reach its tolerance.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field shapes that do not match the grid or each other.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Viscosity tensor violates one of the structural hypotheses.
class HypothesisError : public std::runtime_error {
 public:
  HypothesisError(std::string hypothesis, const std::string& what)
      : std::runtime_error(what), hypothesis_(std::move(hypothesis)) {}
  const std::string& hypothesis() const noexcept { return hypothesis_; }

 private:
  std::string hypothesis_;
};

/// mu - eps_lower <= 0: the anisotropic part destroys strict coercivity.
class CoercivityError : public HypothesisError {
 public:
  explicit CoercivityError(const std::string& what) : HypothesisError("H2", what) {}
};

/// Density dropped below the configured floor, or the state became non-finite.
class PositivityError : public std::runtime_error {
 public:
  PositivityError(double time, const std::string& what) : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class BlowUpError : public PositivityError {
 public:
  using PositivityError::PositivityError;
};

/// Time series too short for the requested time quadrature.
class CadenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RegularizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration parse or validation failure; `key` is "section.name" when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace hoffns
