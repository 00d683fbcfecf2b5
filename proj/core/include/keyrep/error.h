#pragma once

#include <stdexcept>
#include <string>

namespace keyrep {

// Base for every error raised by the library. CLI front ends map these to
// exit code 2 (data error); usage problems are handled before they reach
// library code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by a caller-supplied parameter (sigma <= 0, image
// too small, threshold out of range, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class InvalidDepth : public Error {
 public:
  using Error::Error;
};

class BehindCamera : public Error {
 public:
  using Error::Error;
};

// Homogeneous coordinate vanished or the mapping matrix is singular.
class DegenerateMapping : public Error {
 public:
  using Error::Error;
};

// Operation not defined for the given input (e.g. a homography requested for
// a non-planar scene).
class Unsupported : public Error {
 public:
  using Error::Error;
};

// Inputs are individually valid but do not fit together (e.g. depth mode
// without a depth map).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. Carries the 1-based line number when the format is
// line oriented (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Protocol run could not produce a result (empty manifest, no defined pairs).
class RunError : public Error {
 public:
  using Error::Error;
};

}  // namespace keyrep
