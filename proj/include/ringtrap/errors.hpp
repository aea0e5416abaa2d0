#pragma once

#include <stdexcept>
#include <string>

namespace ringtrap {

/// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorKind {
  kConfig,
  kStability,
  kGeometry,
  kDomain,
  kConvergence,
  kNonConfining,
  kClassification,
  kIo,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed or inconsistent user input (JSON syntax, schema, preconditions).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

/// Mathieu parameter outside the first stability region.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double q)
      : Error(ErrorKind::kStability, what), q_(q) {}
  double q() const { return q_; }

 private:
  double q_;
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error(ErrorKind::kGeometry, what) {}
};

/// Evaluation outside a model's domain, or a minimum found on the domain edge.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

/// An iterative solver did not reach its tolerance. Carries the best residual reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(ErrorKind::kConvergence, what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A stationary point that is not a minimum (negative curvature).
class NonConfiningError : public Error {
 public:
  explicit NonConfiningError(const std::string& what) : Error(ErrorKind::kNonConfining, what) {}
};

class ClassificationError : public Error {
 public:
  explicit ClassificationError(const std::string& what)
      : Error(ErrorKind::kClassification, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace ringtrap
