#pragma once

#include <stdexcept>
#include <string>

namespace ctf {

// Base for everything thrown by the library. The CLI maps subclasses to
// exit codes: ValidationError -> 2, IoError -> 4, anything else -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs: malformed files, out-of-range options, shape mismatches.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Filesystem trouble: missing paths, unreadable or unwritable files.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace ctf
