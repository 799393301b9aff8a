#pragma once

#include <stdexcept>
#include <string>

namespace coord {

// File could not be parsed; message carries the offending line when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

// Input violates a structural invariant (disconnected graph, non-dense ids, ...).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input exceeds a hard size limit of the system.
class CapacityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (shape mismatch, non-scalar loss, ...).
class ContractViolation : public std::logic_error {
  using std::logic_error::logic_error;
};

// The requested operation is outside what this component can do,
// e.g. evaluating a fixed-size agent on a topology of a different size.
class UnsupportedCapability : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scenario rotation or experiment spec references something that does not exist.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coord
