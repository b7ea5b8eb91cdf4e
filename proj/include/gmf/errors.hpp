#pragma once

#include <stdexcept>
#include <string>

namespace gmf {

// Exit codes used by the command-line driver. The numeric values are part of
// the public interface.
enum class ErrorKind {
  Validation = 2,
  Resource = 3,
  Numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Invalid model parameters, malformed configs, violated preconditions.
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

/// A configured memory/size cap would be exceeded.
class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what)
      : Error(ErrorKind::Resource, what) {}
};

/// Factorization could not be repaired within the jitter cap, and similar.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

}  // namespace gmf
