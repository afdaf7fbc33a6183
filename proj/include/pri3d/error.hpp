#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pri3d {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidDepth,
  kOutOfBounds,
  kBehindCamera,
  kOutOfView,
  kZeroValidPixels,
  kNoValidDepth,
  kEmptyMatchSet,
  kNonFiniteFeature,
  kOddDimensions,
  kNormalizationOfZeroVector,
  kEmptyChunk,
  kDivergenceDetected,
  kMissingFile,
  kMalformedPose,
  kMalformedManifest,
  kMalformedImage,
  kDepthSizeMismatch,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedFile,
  kMalformedRecord,
};

std::string_view ToString(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can report a stable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ToString(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pri3d
