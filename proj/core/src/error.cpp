#include "seld/error.hpp"

namespace seld {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kSampleRateMismatch: return "sample rate mismatch";
    case ErrorCode::kEmptySignal: return "empty signal";
    case ErrorCode::kNotHermitian: return "matrix not Hermitian";
    case ErrorCode::kFormat: return "malformed input";
    case ErrorCode::kIo: return "i/o failure";
    case ErrorCode::kOutOfRange: return "value out of range";
  }
  return "unknown error";
}

}  // namespace seld
