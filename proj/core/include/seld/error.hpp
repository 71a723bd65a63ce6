#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seld {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kSampleRateMismatch,
  kEmptySignal,
  kNotHermitian,
  kFormat,
  kIo,
  kOutOfRange,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception type. Readers
// throw before handing out any partially-filled object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) fail(code, what);
}

}  // namespace seld
