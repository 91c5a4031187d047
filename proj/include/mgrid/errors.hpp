#pragma once

#include <stdexcept>
#include <string>

namespace mgrid {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An action lies outside the feasible region of its state.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// More pending jobs than the subset enumerator accepts.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; the message carries the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Enumerated model exceeded its size bound.
class SizeError : public Error {
 public:
  SizeError(const std::string& what, std::size_t estimate)
      : Error(what), estimate_(estimate) {}
  std::size_t estimate() const noexcept { return estimate_; }

 private:
  std::size_t estimate_;
};

/// A state index that was never interned.
class UnknownStateError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgrid
