#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pri3d/correspondence.hpp"
#include "pri3d/encoder.hpp"
#include "pri3d/geo_prior.hpp"
#include "pri3d/geometry.hpp"
#include "pri3d/miner.hpp"
#include "pri3d/training.hpp"

namespace pri3d::io {

inline constexpr int kManifestVersion = 1;
inline constexpr std::uint32_t kBinaryVersion = 1;

// Sequence layout
//
//   DIR/manifest.json
//   DIR/color/NNNNNN.png   8-bit RGB
//   DIR/depth/NNNNNN.png   16-bit grayscale, raw units (meters = raw · depth_scale)
//   DIR/pose/NNNNNN.txt    4×4 camera-to-world, row-major, whitespace separated
//
// Paths inside the manifest are relative to DIR.

struct FrameRecord {
  std::int64_t index = 0;
  std::string color;
  std::string depth;
  std::string pose;
};

struct SequenceManifest {
  int version = kManifestVersion;
  std::string sequence_id;
  Intrinsics intrinsics;
  double depth_scale = 0.001;
  bool resample_depth = true;
  std::vector<FrameRecord> frames;
};

/// Accepts the manifest file or its directory. Throws kMissingFile,
/// kMalformedManifest, kUnsupportedVersion.
SequenceManifest LoadManifest(const std::filesystem::path& path);
void SaveManifest(const std::filesystem::path& dir, const SequenceManifest& manifest);

/// Loads every frame of a sequence (parallel across frames).
std::vector<CameraFrame> LoadSequence(const std::filesystem::path& path);

/// Writes frames in the standard layout. Depth is stored as round(d / scale);
/// frames rendered with depth_quantum == scale reload bit-exactly.
void SaveSequence(const std::filesystem::path& dir, const std::string& sequence_id,
                  std::span<const CameraFrame> frames, double depth_scale = 0.001);

/// Parses a 4×4 pose. Orthonormality error <= 1e-6 passes, <= 1e-4 is
/// re-orthonormalized with a warning on stderr, anything else throws
/// kMalformedPose.
RigidPose LoadPose(const std::filesystem::path& path);
RigidPose ParsePose(const std::string& text);
void SavePose(const std::filesystem::path& path, const RigidPose& pose);

DepthMap LoadDepthPng(const std::filesystem::path& path, double scale);
void SaveDepthPng(const std::filesystem::path& path, const DepthMap& depth, double scale);
ColorImage LoadColorPng(const std::filesystem::path& path);
void SaveColorPng(const std::filesystem::path& path, const ColorImage& image);

/// Nearest-neighbor resampling (no interpolation across discontinuities).
DepthMap ResampleDepthNearest(const DepthMap& depth, int width, int height);

// Binary formats: 8-byte magic, u32 version, u32 byte-order tag
// 0x01020304, then a fixed header and packed records, all little-endian.

std::string EncodeCorrespondences(const CorrespondenceSet& corrs);
CorrespondenceSet DecodeCorrespondences(const std::string& bytes);
void SaveCorrespondences(const std::filesystem::path& path, const CorrespondenceSet& corrs);
CorrespondenceSet LoadCorrespondences(const std::filesystem::path& path);

std::string EncodeChunk(const OccupancyChunk& chunk);
OccupancyChunk DecodeChunk(const std::string& bytes);
void SaveChunk(const std::filesystem::path& path, const OccupancyChunk& chunk);
OccupancyChunk LoadChunk(const std::filesystem::path& path);

std::string EncodeCheckpoint(const EncoderParams& params);
EncoderParams DecodeCheckpoint(const std::string& bytes);
void SaveCheckpoint(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams LoadCheckpoint(const std::filesystem::path& path);

void SavePairs(const std::filesystem::path& path, std::span<const FramePair> pairs, const MiningOptions& options);
std::vector<FramePair> LoadPairs(const std::filesystem::path& path);

/// CSV columns: step,lr,loss_view_mean,loss_geo_mean,invariance_score
/// (invariance left empty on steps where it was not computed).
void SaveTrace(const std::filesystem::path& path, std::span<const TraceRow> trace);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& bytes);

/// Canonical file names used by the CLI.
std::string CorrespondenceFileName(std::int64_t i, std::int64_t j);
std::string ChunkFileName(std::int64_t frame);

}  // namespace pri3d::io
