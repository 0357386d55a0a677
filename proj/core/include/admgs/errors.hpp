#pragma once

#include <stdexcept>
#include <string>

namespace admgs {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A traversal id that is not present in the traversal table.
class MissingTraversal : public Error {
 public:
  explicit MissingTraversal(int traversal)
      : Error("unknown traversal id " + std::to_string(traversal)) {}
};

// Geometry that admits no well-defined answer (e.g. camera at the
// Gaussian center when extracting an oriented normal).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// An API contract was broken (tape reuse, mismatched forward cache, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss; carries the offending component.
class TrainingDivergence : public Error {
 public:
  explicit TrainingDivergence(const std::string& component, long long iteration)
      : Error("non-finite loss component '" + component + "' at iteration " +
              std::to_string(iteration)),
        component_(component),
        iteration_(iteration) {}
  const std::string& component() const { return component_; }
  long long iteration() const { return iteration_; }

 private:
  std::string component_;
  long long iteration_;
};

// File system / serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint loading failures, one class per distinguishable cause.
class VersionMismatch : public IoError {
 public:
  using IoError::IoError;
};
class TruncatedFile : public IoError {
 public:
  using IoError::IoError;
};
class ChecksumFailure : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace admgs
