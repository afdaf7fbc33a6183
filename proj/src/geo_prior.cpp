#include "pri3d/geo_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "pri3d/error.hpp"
#include "pri3d/parallel.hpp"

namespace pri3d {
namespace {

std::int64_t LatticeFloor(double x, double voxel) {
  auto k = static_cast<std::int64_t>(std::floor(x / voxel));
  // Keep the snapped origin at or below x despite rounding in x / voxel.
  while (static_cast<double>(k) * voxel > x) --k;
  return k;
}

}  // namespace

FrustumBox FrustumAabb(const CameraFrame& frame, double margin) {
  const std::vector<PixelPoint> points = FrameToWorldPoints(frame, 1);
  if (points.empty()) throw Error(ErrorCode::kNoValidDepth, "frame has no valid depth");
  FrustumBox box;
  box.min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  box.max = -box.min;
  for (const PixelPoint& p : points) {
    box.min = box.min.cwiseMin(p.point.xyz);
    box.max = box.max.cwiseMax(p.point.xyz);
  }
  box.min.array() -= margin;
  box.max.array() += margin;
  return box;
}

bool OccupancyChunk::IsOccupied(const VoxelIndex& v) const { return Find(v) >= 0; }

std::int64_t OccupancyChunk::Find(const VoxelIndex& v) const {
  if (!InBounds(v)) return -1;
  const std::int64_t key = Linear(v);
  const auto it = std::lower_bound(occupied.begin(), occupied.end(), key,
                                   [this](const VoxelIndex& o, std::int64_t k) { return Linear(o) < k; });
  if (it == occupied.end() || Linear(*it) != key) return -1;
  return it - occupied.begin();
}

OccupancyChunk CropChunk(std::span<const WorldPoint> surface, const FrustumBox& box, double voxel) {
  if (!(voxel > 0.0)) throw Error(ErrorCode::kInvalidArgument, "voxel size must be positive");
  OccupancyChunk chunk;
  chunk.voxel_size = voxel;
  for (int a = 0; a < 3; ++a) {
    const std::int64_t k = LatticeFloor(box.min[a], voxel);
    chunk.origin[a] = static_cast<double>(k) * voxel;
    const std::int64_t n = static_cast<std::int64_t>(std::floor((box.max[a] - chunk.origin[a]) / voxel)) + 1;
    if (n <= 0 || n > std::numeric_limits<std::int32_t>::max()) {
      throw Error(ErrorCode::kInvalidArgument, "chunk extent out of range");
    }
    chunk.dims[a] = static_cast<std::int32_t>(n);
  }

  // Per-block partial occupancy, merged by sort + unique so the result does
  // not depend on the block layout.
  const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(ThreadCount(), surface.size()));
  std::vector<std::vector<std::int64_t>> partial(blocks);
  const std::size_t per_block = (surface.size() + blocks - 1) / blocks;
  ParallelFor(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t end = std::min(surface.size(), (b + 1) * per_block);
      for (std::size_t i = b * per_block; i < end; ++i) {
        const Eigen::Vector3d& p = surface[i].xyz;
        if (!box.Contains(p)) continue;
        VoxelIndex v;
        v.x = static_cast<std::int32_t>(std::floor((p.x() - chunk.origin.x()) / voxel));
        v.y = static_cast<std::int32_t>(std::floor((p.y() - chunk.origin.y()) / voxel));
        v.z = static_cast<std::int32_t>(std::floor((p.z() - chunk.origin.z()) / voxel));
        if (!chunk.InBounds(v)) continue;
        partial[b].push_back(chunk.Linear(v));
      }
      std::sort(partial[b].begin(), partial[b].end());
      partial[b].erase(std::unique(partial[b].begin(), partial[b].end()), partial[b].end());
    }
  });
  std::vector<std::int64_t> merged;
  for (const auto& p : partial) merged.insert(merged.end(), p.begin(), p.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

  chunk.occupied.reserve(merged.size());
  const std::int64_t nx = chunk.dims[0];
  const std::int64_t ny = chunk.dims[1];
  for (std::int64_t lin : merged) {
    chunk.occupied.push_back({static_cast<std::int32_t>(lin % nx), static_cast<std::int32_t>((lin / nx) % ny),
                              static_cast<std::int32_t>(lin / (nx * ny))});
  }
  return chunk;
}

std::vector<WorldPoint> SurfaceFromSequence(std::span<const CameraFrame> frames, int pixel_stride) {
  std::vector<WorldPoint> surface;
  for (const CameraFrame& f : frames) {
    for (const PixelPoint& p : FrameToWorldPoints(f, pixel_stride)) surface.push_back(p.point);
  }
  return surface;
}

PixelVoxelCorrs PixelVoxelCorrespondences(const CameraFrame& frame, const OccupancyChunk& chunk, double radius,
                                          int pixel_stride) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be positive");
  PixelVoxelCorrs out;
  out.frame = frame.index;
  if (chunk.occupied.empty()) return out;

  const std::vector<PixelPoint> points = FrameToWorldPoints(frame, pixel_stride);
  std::vector<std::optional<PixelVoxelMatch>> found(points.size());
  ParallelFor(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Vector3d local = (points[i].point.xyz - chunk.origin) / chunk.voxel_size;
      const double reach = radius / chunk.voxel_size;
      std::array<std::int64_t, 3> lo{};
      std::array<std::int64_t, 3> hi{};
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(local[a] - reach)));
        hi[a] = std::min<std::int64_t>(chunk.dims[a] - 1, static_cast<std::int64_t>(std::floor(local[a] + reach)));
      }
      double best = std::numeric_limits<double>::infinity();
      std::optional<VoxelIndex> best_v;
      for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
        for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
          for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
            const VoxelIndex v{static_cast<std::int32_t>(x), static_cast<std::int32_t>(y),
                               static_cast<std::int32_t>(z)};
            if (!chunk.IsOccupied(v)) continue;
            const double d = Distance(points[i].point, chunk.Center(v));
            // Iteration runs in increasing linear index, so strict
            // improvement keeps the lowest index on ties.
            if (d <= radius && d < best) {
              best = d;
              best_v = v;
            }
          }
        }
      }
      if (best_v) found[i] = PixelVoxelMatch{points[i].pixel, *best_v, static_cast<float>(best)};
    }
  });
  for (const auto& m : found) {
    if (m) out.matches.push_back(*m);
  }
  return out;
}

}  // namespace pri3d
