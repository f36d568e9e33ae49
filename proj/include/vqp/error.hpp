#pragma once

#include <stdexcept>
#include <string>

namespace vqp {

// All recoverable failures throw Error with a short stable code such as
// "not-spd" or "kl-eigensolve-failed". The code doubles as the what() text.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code)
      : std::runtime_error(code), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace vqp
