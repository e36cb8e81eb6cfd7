#pragma once

#include <stdexcept>
#include <string>

namespace ebridge {

// Failure classes mirror the process exit-code contract of the CLI
// (input error / singular Gramian / numerical divergence).
enum class ErrorCode {
  invalid_input = 1,
  singular_gramian = 2,
  divergence = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ebridge
