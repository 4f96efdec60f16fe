#pragma once

#include <stdexcept>
#include <string>

namespace revsent {

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kStage,   // runtime failure inside a pipeline stage
  kIo,      // unreadable / malformed input, output write failure
  kConfig,  // invalid configuration or unresolvable secret
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class StageError : public Error {
 public:
  explicit StageError(const std::string& what) : Error(ErrorKind::kStage, what) {}
};

// Retryable transport failure: connection problems, timeouts, 429 / 5xx.
class TransportError : public StageError {
 public:
  explicit TransportError(const std::string& what) : StageError(what) {}
};

// 401 / 403 from a remote endpoint. Never retried.
class AuthError : public StageError {
 public:
  explicit AuthError(const std::string& what) : StageError(what) {}
};

// Raised when a held-out id reaches a training-stage input.
class LeakageError : public StageError {
 public:
  explicit LeakageError(const std::string& what) : StageError(what) {}
};

}  // namespace revsent
