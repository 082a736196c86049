#pragma once

#include <stdexcept>
#include <string>

namespace pnp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// External denoiser failures. Each failure mode has its own type so callers
// can tell a dead adapter from a misbehaving one.
class ExternalError : public Error {
 public:
  using Error::Error;
};
class HandshakeError : public ExternalError {
 public:
  using ExternalError::ExternalError;
};
class ProtocolError : public ExternalError {
 public:
  using ExternalError::ExternalError;
};
class AdapterError : public ExternalError {
 public:
  AdapterError(int status, const std::string& what)
      : ExternalError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};
class TimeoutError : public ExternalError {
 public:
  using ExternalError::ExternalError;
};

/// Solver failure annotated with the iteration it happened in.
class IterationError : public Error {
 public:
  IterationError(int iteration, const std::string& what)
      : Error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace pnp
