#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fairsumm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A remote endpoint (or a replayed fixture) returned data that does not match the wire schema.
class ProtocolViolation : public Error {
 public:
  explicit ProtocolViolation(const std::string& detail)
      : Error("protocol violation: " + detail) {}
};

/// Retryable transport failure: connection refused, timeout, 5xx.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Annotation requests that still failed after all retries.
class AnnotationFailure : public Error {
 public:
  AnnotationFailure(const std::string& what, std::vector<std::size_t> failed_indices)
      : Error(what), failed_indices_(std::move(failed_indices)) {}

  const std::vector<std::size_t>& failed_indices() const noexcept { return failed_indices_; }

 private:
  std::vector<std::size_t> failed_indices_;
};

/// Configuration or experimental-design validation failure (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairsumm
