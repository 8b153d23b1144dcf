#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace lossprior {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A parameter point violates a model domain (or its evaluation margin).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

/// A numerical routine failed to meet its tolerance. Carries the residual
/// (quadrature) or the best value found so far (optimizers) when available.
class NumericsError : public Error {
 public:
  explicit NumericsError(const std::string& what,
                         std::optional<double> residual = std::nullopt,
                         std::optional<double> best_value = std::nullopt)
      : Error(what), residual_(residual), best_value_(best_value) {}

  std::optional<double> residual() const { return residual_; }
  std::optional<double> best_value() const { return best_value_; }

 private:
  std::optional<double> residual_;
  std::optional<double> best_value_;
};

/// Dimension or symmetry mismatch between matrix/vector arguments.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

/// An API precondition was violated by the caller.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(what) {}
};

}  // namespace lossprior
