#pragma once

#include <stdexcept>
#include <string>

namespace forestseg {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad parameters, malformed records, contract violations. CLI exit code 1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Filesystem and format-level failures. CLI exit code 2.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace forestseg
