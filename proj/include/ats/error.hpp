#pragma once

#include <stdexcept>
#include <string>

namespace ats {

// Every failure surfaced by the library carries a stable machine-readable
// code (e.g. "MalformedRow") next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)), message_(message) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string code_;
  std::string message_;
};

}  // namespace ats
