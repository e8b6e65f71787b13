#pragma once

#include <stdexcept>
#include <string>

namespace mdm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of a mirror map beyond tolerance.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A step index or token index is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// The requested combination of mirror map / target / mode is not supported.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ScoreModelError : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN or infinite loss.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// A checkpoint file is malformed or does not match the requested model.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace mdm
