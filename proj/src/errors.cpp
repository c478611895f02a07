#include "zml/errors.hpp"

namespace zml {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::domain: return "domain";
    case ErrorKind::regime: return "regime";
    case ErrorKind::index: return "index";
    case ErrorKind::pole: return "pole";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::bounds:
    case ErrorKind::index:
      return 2;
    case ErrorKind::capacity:
    case ErrorKind::coverage:
      return 4;
    default:
      return 3;
  }
}

}  // namespace zml
