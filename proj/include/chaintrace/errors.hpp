#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chaintrace {

// Each class maps onto one CLI exit code (see tools/chaintrace.cpp).

/// Invalid construction parameters (filter bounds, model parameters, sizes).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operands whose shapes do not line up, e.g. filters of different lengths.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A value cannot be canonically encoded (reserved bytes in a token).
class EncodingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed input file. Carries the 1-based line number, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The telco refused a disclosure request because it violates release policy.
class PolicyRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Telco-side data is inconsistent (escrow does not cover a username).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two-party search messages arrived out of lockstep.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chaintrace
