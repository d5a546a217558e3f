#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ectrl {

/// Library-wide exception. `code` is a short machine-readable tag
/// ("invalid_argument", "dimension", "ciphertext", "key", "ring_overflow",
/// "singular", "not_positive_definite", "numeric", "protocol", "config",
/// "io", "timeout") so callers can map failures without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ectrl
