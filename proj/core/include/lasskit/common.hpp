// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <bit>
#include <stdexcept>
#include <string>

namespace lasskit {

inline constexpr const char* kVersion = "0.1.0";

// Serialized formats (checkpoints, float blobs) assume a little-endian host.
static_assert(std::endian::native == std::endian::little,
              "lasskit requires a little-endian target");

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kSilentSource,
  kUnknownQuery,
  kColaViolation,
  kShortClip,
  kIoError,
  kParseError,
  kNonFinite,
  kExhaustedPool,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSilentSource: return "SilentSource";
    case ErrorCode::kUnknownQuery: return "UnknownQuery";
    case ErrorCode::kColaViolation: return "ColaViolation";
    case ErrorCode::kShortClip: return "ShortClip";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kExhaustedPool: return "ExhaustedPool";
  }
  return "Unknown";
}

}  // namespace lasskit
