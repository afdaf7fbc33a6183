#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pri3d/geo_prior.hpp"
#include "pri3d/miner.hpp"
#include "pri3d/synthetic.hpp"
#include "pri3d/training.hpp"

namespace pri3d {

/// One occupancy chunk per requested frame position, cropped from the
/// surface formed by all frames of the sequence.
std::vector<OccupancyChunk> BuildChunks(std::span<const CameraFrame> sequence, std::span<const std::size_t> positions,
                                        double voxel = 0.02, int surface_stride = 1);

/// Same, but cropping from an explicitly given surface point cloud.
std::vector<OccupancyChunk> BuildChunks(std::span<const WorldPoint> surface, std::span<const CameraFrame> sequence,
                                        std::span<const std::size_t> positions, double voxel = 0.02);

/// Assembles a training tuple; pixel-voxel correspondences are computed from
/// the frames and chunks with `radius`.
PairSample MakePairSample(const CameraFrame& frame_i, const CameraFrame& frame_j, CorrespondenceSet view,
                          const OccupancyChunk& chunk_i, const OccupancyChunk& chunk_j, double radius = 0.02);

struct SyntheticDatasetOptions {
  std::uint64_t seed = 1;
  int boxes = 6;
  int frames = 40;
  int width = 64;
  int height = 48;
  CircularPathOptions path;
  MiningOptions mining{.frame_stride = 1, .min_overlap = 0.3, .radius = 0.02, .pixel_stride = 1};
  double voxel = 0.02;
  /// The surface that chunks are cropped from is rendered along the same
  /// path at this multiple of the frame resolution, standing in for a
  /// reconstructed mesh that is much denser than one depth image.
  int surface_scale = 4;
  std::size_t max_pairs = 20;
};

struct SyntheticDataset {
  SceneSpec scene;
  std::vector<CameraFrame> frames;
  std::vector<FramePair> pairs;
  std::vector<PairSample> samples;
};

/// Scene → rendered path → mined pairs → chunks → training tuples. Pairs are
/// taken in (i, j) order up to max_pairs.
SyntheticDataset BuildSyntheticDataset(const SyntheticDatasetOptions& options);

}  // namespace pri3d
