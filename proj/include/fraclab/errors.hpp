#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Base of every library failure. `code()` is the machine-readable tag that the
/// CLI writes into its JSON error reports.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& message, std::string code = "invalid_argument")
      : Error(std::move(code), message) {}
};

class DimensionMismatch : public Error {
public:
  explicit DimensionMismatch(const std::string& message)
      : Error("dimension_mismatch", message) {}
};

/// A coefficient sample was not symmetric positive definite (or not finite).
class CoefficientViolation : public Error {
public:
  explicit CoefficientViolation(const std::string& message)
      : Error("coefficient_violation", message) {}
};

class SingularMass : public Error {
public:
  explicit SingularMass(const std::string& message) : Error("singular_mass", message) {}
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& message, double achieved)
      : Error("convergence_failure", message), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

private:
  double achieved_;
};

/// A numerical procedure could not reach its requested tolerance.
class AccuracyError : public Error {
public:
  AccuracyError(const std::string& message, double estimate)
      : Error("accuracy_failure", message), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

private:
  double estimate_;
};

class PoleError : public Error {
public:
  explicit PoleError(const std::string& message) : Error("gamma_pole", message) {}
};

class DivisionHazard : public Error {
public:
  explicit DivisionHazard(const std::string& message) : Error("division_hazard", message) {}
};

class IntegrationError : public Error {
public:
  IntegrationError(const std::string& message, double location)
      : Error("integration_failure", message), location_(location) {}
  double location() const noexcept { return location_; }

private:
  double location_;
};

class LinearSolveError : public Error {
public:
  explicit LinearSolveError(const std::string& message) : Error("linear_solve_failure", message) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& message, std::string code = "parse_error")
      : Error(std::move(code), message) {}
};

}  // namespace fraclab
