#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace hypergrad {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (wrong shapes, bad arguments).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Linear solve hit a pivot below the singularity threshold.
class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(std::string matrix_name)
      : Error("singular matrix: " + matrix_name), matrix_name_(std::move(matrix_name)) {}

  const std::string& matrix_name() const { return matrix_name_; }

 private:
  std::string matrix_name_;
};

/// Non-finite values, non-convergence and similar numerical breakdowns.
class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what, std::optional<std::size_t> step = std::nullopt,
                            std::optional<double> last_estimate = std::nullopt)
      : Error(what), step_(step), last_estimate_(last_estimate) {}

  std::optional<std::size_t> step() const { return step_; }
  std::optional<double> last_estimate() const { return last_estimate_; }

 private:
  std::optional<std::size_t> step_;
  std::optional<double> last_estimate_;
};

/// Input outside the domain of a map (e.g. log of a non-positive value).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The problem lacks an oracle the operation needs (e.g. no exact root).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; `line` is 1-based, 0 when the input has no lines.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input whose content violates a model requirement.
class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypergrad
