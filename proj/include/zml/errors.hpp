#pragma once

#include <stdexcept>
#include <string>

namespace zml {

/// Error categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  bounds,      // argument outside an accepted range (sieve limits, grid sizes)
  domain,      // mathematically undefined input
  regime,      // evaluation method not valid at this height / T
  index,       // scheme index out of range
  pole,        // too close to a pole of zeta
  truncation,  // series tail bound above tolerance
  capacity,    // term-count or memory cap exceeded
  coverage,    // prime table does not reach a needed boundary
  config,      // inconsistent configuration
};

const char* to_string(ErrorKind kind) noexcept;

/// Exit code used by the CLI: 2 config, 3 numeric regime, 4 capacity.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace zml
