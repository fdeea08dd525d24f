#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace energynet {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: bad parameters, unknown fields, missing edges.
/// Carries every violation found, not just the first one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  ValidationError(const std::string& violation);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// An algorithm was invoked outside its domain (unbalanced inputs,
/// disconnected graph, missing generation source).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Integration blew up, failed to converge, or a linear system was singular.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace energynet
