#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "pri3d/correspondence.hpp"
#include "pri3d/geometry.hpp"

namespace pri3d {

struct CellIndex {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  bool operator==(const CellIndex&) const = default;
};

/// Uniform hash grid over world points. Points are stored contiguously,
/// grouped by cell, keeping their input order inside each cell.
class SpatialHashGrid {
 public:
  SpatialHashGrid() = default;
  SpatialHashGrid(std::vector<PixelPoint> points, double cell_size);

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return points_.size(); }
  std::size_t cell_count() const { return ranges_.size(); }
  bool empty() const { return points_.empty(); }

  /// floor(coord / cell) componentwise.
  CellIndex CellOf(const Eigen::Vector3d& p) const;

  /// Points stored in one cell; empty span for unoccupied cells.
  std::span<const PixelPoint> Cell(const CellIndex& c) const;

  /// Visits every point of the 3×3×3 cell block around `p`'s cell.
  template <typename Fn>
  void ForEachNeighbor(const Eigen::Vector3d& p, Fn&& fn) const {
    const CellIndex c = CellOf(p);
    for (std::int64_t dz = -1; dz <= 1; ++dz) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          for (const PixelPoint& q : Cell({c.x + dx, c.y + dy, c.z + dz})) fn(q);
        }
      }
    }
  }

 private:
  static std::uint64_t Key(const CellIndex& c);

  double cell_size_ = 0.0;
  std::vector<PixelPoint> points_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> ranges_;
};

/// Throws kInvalidArgument for cell <= 0.
SpatialHashGrid BuildGrid(std::vector<PixelPoint> points, double cell);

/// Grid-accelerated matching of source points against a target grid built
/// with cell size >= radius. Same rule as OracleCorrespondences.
std::vector<Match> MatchPoints(std::span<const PixelPoint> source, const SpatialHashGrid& target, double radius);

/// Matches frame A into frame B: for every valid pixel of A (on the pixel
/// stride), the nearest valid world point of B within `radius`; ties go to
/// the lower row-major B pixel.
CorrespondenceSet MatchFrames(const CameraFrame& a, const CameraFrame& b, double radius = 0.02,
                              int pixel_stride = 1);

/// 2|M| / (valid_source + valid_target), clamped to [0, 1]. Throws
/// kZeroValidPixels when both frames are empty.
double ComputeOverlap(const CorrespondenceSet& corrs);

struct FramePair {
  std::int64_t i = 0;
  std::int64_t j = 0;
  double overlap = 0.0;
  std::uint64_t correspondences = 0;

  bool operator==(const FramePair&) const = default;
};

struct MiningOptions {
  int frame_stride = 25;
  double min_overlap = 0.3;
  double radius = 0.02;
  int pixel_stride = 1;
};

/// Positions into `sequence` kept by the frame stride: 0, s, 2s, ...
std::vector<std::size_t> KeptFramePositions(std::size_t sequence_length, int frame_stride);

/// Evaluates all unordered pairs of kept frames and returns those with
/// overlap >= min_overlap, ordered by (i, j) frame index.
std::vector<FramePair> MinePairs(std::span<const CameraFrame> sequence, const MiningOptions& options = {});

/// Every evaluated candidate pair regardless of the overlap threshold.
std::vector<FramePair> EvaluateCandidatePairs(std::span<const CameraFrame> sequence,
                                              const MiningOptions& options = {});

/// Uniform sample without replacement of min(k, |M|) matches, kept in
/// source-pixel order. Deterministic in `seed`.
CorrespondenceSet SubsampleMatches(const CorrespondenceSet& corrs, std::size_t k, std::uint64_t seed);

}  // namespace pri3d
