#pragma once

#include <stdexcept>
#include <string>

namespace pbvf {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller passed something malformed: wrong lengths, empty batches, bad indices.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what) {}
};

class ShapeError : public InputError {
 public:
  explicit ShapeError(const std::string& what) : InputError(what) {}
};

// Operation requested on a policy head that does not support it.
class UnsupportedHeadError : public InputError {
 public:
  explicit UnsupportedHeadError(const std::string& what) : InputError(what) {}
};

// Environment used out of order, e.g. step() after the episode ended.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(what) {}
};

// Non-finite values, non-convergent iterations, degenerate ratios.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace pbvf
