#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pri3d/geometry.hpp"

namespace pri3d {

/// Axis-aligned world box around what a frame observes.
struct FrustumBox {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool Contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// AABB of the frame's back-projected valid pixels, grown by `margin` on
/// every side. Throws kNoValidDepth for a frame without valid depth.
FrustumBox FrustumAabb(const CameraFrame& frame, double margin = 0.02);

struct VoxelIndex {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  bool operator==(const VoxelIndex&) const = default;
};

/// Sparse occupancy over a dense index box [0, dims) anchored at `origin`,
/// which sits on the global lattice of spacing voxel_size. Occupied voxels
/// are unique and sorted by linear index x + nx·(y + ny·z).
struct OccupancyChunk {
  std::int64_t frame = 0;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double voxel_size = 0.02;
  std::array<std::int32_t, 3> dims = {0, 0, 0};
  std::vector<VoxelIndex> occupied;

  std::int64_t Linear(const VoxelIndex& v) const {
    return v.x + static_cast<std::int64_t>(dims[0]) * (v.y + static_cast<std::int64_t>(dims[1]) * v.z);
  }
  bool InBounds(const VoxelIndex& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims[0] && v.y < dims[1] && v.z < dims[2];
  }
  WorldPoint Center(const VoxelIndex& v) const {
    return WorldPoint(origin + voxel_size * Eigen::Vector3d(v.x + 0.5, v.y + 0.5, v.z + 0.5));
  }
  /// Binary search over the sorted occupied list.
  bool IsOccupied(const VoxelIndex& v) const;
  /// Position of `v` in `occupied`, or -1.
  std::int64_t Find(const VoxelIndex& v) const;

  bool operator==(const OccupancyChunk&) const = default;
};

/// Bins the surface points that fall inside `box` at `voxel` resolution.
/// Throws kInvalidArgument for voxel <= 0.
OccupancyChunk CropChunk(std::span<const WorldPoint> surface, const FrustumBox& box, double voxel = 0.02);

/// Stand-in for the fused scene surface: every valid back-projected pixel of
/// every frame.
std::vector<WorldPoint> SurfaceFromSequence(std::span<const CameraFrame> frames, int pixel_stride = 1);

struct PixelVoxelMatch {
  Pixel pixel;
  VoxelIndex voxel;
  float distance = 0.0f;

  bool operator==(const PixelVoxelMatch&) const = default;
};

struct PixelVoxelCorrs {
  std::int64_t frame = 0;
  std::vector<PixelVoxelMatch> matches;  // sorted by pixel, row-major

  bool operator==(const PixelVoxelCorrs&) const = default;
};

/// For each valid pixel, the occupied voxel whose center is nearest to the
/// pixel's world point within `radius`; ties go to the lower linear index.
PixelVoxelCorrs PixelVoxelCorrespondences(const CameraFrame& frame, const OccupancyChunk& chunk,
                                          double radius = 0.02, int pixel_stride = 1);

}  // namespace pri3d
