#pragma once

#include <stdexcept>
#include <string>

namespace subpot {

/// Broad failure classes; the CLI maps each onto an exit status.
enum class ErrorKind {
  Validation,    // model or configuration violates an invariant
  Domain,        // argument outside the operation's domain
  Precondition,  // mathematically valid input the method cannot handle
  Accuracy,      // requested tolerance not reached
  Budget,        // combinatorial or panel budget exhausted
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Short machine-readable tag, e.g. "out-of-radius".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string code, const std::string& what)
      : Error(ErrorKind::Validation, std::move(code), what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::Domain, "domain", what) {}
};

class PreconditionError : public Error {
 public:
  PreconditionError(std::string code, const std::string& what)
      : Error(ErrorKind::Precondition, std::move(code), what) {}
};

/// Carries the error that was actually achieved.
class AccuracyError : public Error {
 public:
  AccuracyError(std::string code, const std::string& what, double achieved)
      : Error(ErrorKind::Accuracy, std::move(code), what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class BudgetError : public Error {
 public:
  BudgetError(std::string code, const std::string& what)
      : Error(ErrorKind::Budget, std::move(code), what) {}
};

}  // namespace subpot
