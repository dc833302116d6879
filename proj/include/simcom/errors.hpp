#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simcom {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedSimplexError : public Error {
 public:
  using Error::Error;
};

/// Requested degree does not exist (e.g. B_0, or a degree above the top).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Backward called without a matching forward.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite gradient or loss during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptySampleError : public Error {
 public:
  using Error::Error;
};

/// Nothing was received in a round; the loss is undefined.
class NoSignalError : public Error {
 public:
  using Error::Error;
};

/// AWGN over an all-zero embedding: noise variance is undefined.
class ZeroPowerError : public Error {
 public:
  using Error::Error;
};

/// Walk produced a complex too small to train on.
class DegenerateRoundError : public Error {
 public:
  using Error::Error;
};

class NoDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace simcom
