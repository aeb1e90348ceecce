#pragma once

#include <stdexcept>
#include <string>

namespace galds {

// Error classes map one-to-one onto CLI exit codes.
enum class ErrorCode {
  usage = 1,       // bad flags, malformed or unknown config keys
  io = 2,          // missing or unreadable files, write failures
  validation = 3,  // structurally invalid inputs (skeletons, datasets, shapes)
  numeric = 4,     // non-finite values, instability, singular systems
  gate = 5,        // checkpoint quality gate not met
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace galds
