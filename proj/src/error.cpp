#include "pri3d/error.hpp"

namespace pri3d {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kOutOfView: return "OutOfView";
    case ErrorCode::kZeroValidPixels: return "ZeroValidPixels";
    case ErrorCode::kNoValidDepth: return "NoValidDepth";
    case ErrorCode::kEmptyMatchSet: return "EmptyMatchSet";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kOddDimensions: return "OddDimensions";
    case ErrorCode::kNormalizationOfZeroVector: return "NormalizationOfZeroVector";
    case ErrorCode::kEmptyChunk: return "EmptyChunk";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedPose: return "MalformedPose";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kMalformedImage: return "MalformedImage";
    case ErrorCode::kDepthSizeMismatch: return "DepthSizeMismatch";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
  }
  return "Unknown";
}

}  // namespace pri3d
