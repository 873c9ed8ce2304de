#pragma once

#include <stdexcept>
#include <string>

namespace rae {

// Failure categories map onto CLI exit codes: validation-type errors -> 1,
// I/O -> 2, numeric -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

class InvalidState : public Error {
 public:
  explicit InvalidState(const std::string& msg) : Error(msg) {}
};

class DegenerateNormalizer : public Error {
 public:
  explicit DegenerateNormalizer(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace rae
