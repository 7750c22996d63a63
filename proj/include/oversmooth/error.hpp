#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oversmooth {

enum class ErrorCode {
  kIsolatedVertex,
  kNotPrimitive,
  kEmptyGraph,
  kInvalidArgument,
  kDimensionMismatch,
  kZeroInput,
  kDegenerateProduct,
  kInvalidDim,
  kStepTooLarge,
  kWindowTooShort,
  kAllTruncated,
  kParseError,
  kEmptyAfterFilter,
  kDisconnectedAfterRetries,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; `code()` says which contract broke.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// True for failures of a mathematical precondition (as opposed to bad
// input or configuration).
inline bool is_math_precondition(ErrorCode code) {
  return code == ErrorCode::kNotPrimitive ||
         code == ErrorCode::kIsolatedVertex ||
         code == ErrorCode::kStepTooLarge ||
         code == ErrorCode::kDegenerateProduct;
}

}  // namespace oversmooth
