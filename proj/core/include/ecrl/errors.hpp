#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecrl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidOrderError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRepresentationError : public Error {
 public:
  using Error::Error;
};

/// Vector length or block structure does not match a ReprLayout.
class LayoutError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRotationError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an API precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class BatchTooSmallError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class EmptyBufferError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset line; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ecrl
