#pragma once

#include <stdexcept>
#include <string>

namespace sega {

enum class ErrorKind {
  format,         // unparseable input file or payload
  validation,     // well-formed input violating an invariant
  configuration,  // inconsistent caller-supplied configuration
  capability,     // unsupported (language, marker) or similar pair
  io,             // filesystem failure
  credential,     // missing or rejected API credential
  throttle,       // rate limit not resolved within the retry budget
  protocol,       // malformed provider reply
  precondition,   // caller violated an operation precondition
  environment,    // required toolchain not installed
  parse,          // unrecognized runner output
  domain,         // numeric argument outside the valid domain
  degenerate,     // statistically or structurally degenerate input
  shape,          // tensor/stream dimension mismatch
  aggregation,    // incompatible per-run results
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace sega
