#pragma once

#include <stdexcept>
#include <string>

namespace fujita {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on parameters or data was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Two profiles that must share a grid do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

// An ODE or PDE integrator could not make progress (step-size collapse, NaN).
class IntegratorFailure : public Error {
 public:
  using Error::Error;
};

// A bisection bracket does not separate the two classes it is supposed to.
class InvalidBracket : public Error {
 public:
  using Error::Error;
};

// A scenario was requested for (n, p) outside its hypothesis.
class RegimeMismatch : public Error {
 public:
  using Error::Error;
};

// A persisted record has an unsupported schema version or malformed content.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A file referenced by a persisted record does not exist.
class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(std::string path)
      : Error("missing artifact: " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace fujita
