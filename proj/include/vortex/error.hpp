#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vortex {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed word/polynomial text or JSON input. `position` is a 0-based
/// character offset into the offending string (npos when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position = std::string::npos)
      : Error(position == std::string::npos
                  ? what
                  : what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A product or functional was asked to evaluate outside the rules that
/// define it: unregistered family, omega(1) mismatch, mixed-family input to a
/// single-family functional, non-alternating oracle input, and so on.
class RuleViolation : public Error {
 public:
  using Error::Error;
};

/// Invalid numeric parameters: size guards, dimension mismatches, failed
/// orthonormality checks.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace vortex
