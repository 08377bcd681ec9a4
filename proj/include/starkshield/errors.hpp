#pragma once

#include <stdexcept>
#include <string>

namespace starkshield {

enum class ErrorCode {
  invalid_argument,
  out_of_range,
  singularity,
  fit_failed,
  config,
  numerical,
  io,
};

/// Every failure raised by the library carries one of the codes above; the C
/// API maps them one-to-one onto ss_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::invalid_argument, message);
}

}  // namespace starkshield
