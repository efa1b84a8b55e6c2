#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace headtrack {

// Base for every error raised by the library. The CLI maps NumericError to
// exit code 3 and everything else derived from Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text: wrong arity, non-numeric field, bad header.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a domain invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class MissingIdError : public FormatError {
 public:
  using FormatError::FormatError;
};

class OutOfOrderFrame : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class EmptyGroundTruth : public InvariantError {
 public:
  EmptyGroundTruth() : InvariantError("ground truth contains no boxes") {}
};

class SampleTooLarge : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class DegenerateData : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class DimensionMismatch : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace headtrack
