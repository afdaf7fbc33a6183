#include "pri3d/pipeline.hpp"

#include <algorithm>
#include <map>

#include "pri3d/error.hpp"
#include "pri3d/parallel.hpp"

namespace pri3d {

std::vector<OccupancyChunk> BuildChunks(std::span<const CameraFrame> sequence, std::span<const std::size_t> positions,
                                        double voxel, int surface_stride) {
  const std::vector<WorldPoint> surface = SurfaceFromSequence(sequence, surface_stride);
  return BuildChunks(surface, sequence, positions, voxel);
}

std::vector<OccupancyChunk> BuildChunks(std::span<const WorldPoint> surface, std::span<const CameraFrame> sequence,
                                        std::span<const std::size_t> positions, double voxel) {
  std::vector<OccupancyChunk> chunks(positions.size());
  ParallelFor(positions.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const CameraFrame& f = sequence[positions[i]];
      chunks[i] = CropChunk(surface, FrustumAabb(f, voxel), voxel);
      chunks[i].frame = f.index;
    }
  });
  return chunks;
}

PairSample MakePairSample(const CameraFrame& frame_i, const CameraFrame& frame_j, CorrespondenceSet view,
                          const OccupancyChunk& chunk_i, const OccupancyChunk& chunk_j, double radius) {
  PairSample s;
  s.image_i = frame_i.color;
  s.image_j = frame_j.color;
  s.chunk_i = chunk_i;
  s.chunk_j = chunk_j;
  s.view = std::move(view);
  s.geo_i = PixelVoxelCorrespondences(frame_i, chunk_i, radius);
  s.geo_j = PixelVoxelCorrespondences(frame_j, chunk_j, radius);
  return s;
}

SyntheticDataset BuildSyntheticDataset(const SyntheticDatasetOptions& options) {
  SyntheticDataset ds;
  ds.scene = GenerateScene(options.seed, options.boxes);
  const CameraPath path = CircularPath(ds.scene, options.frames, options.width, options.height, options.path);
  ds.frames = RenderSequence(ds.scene, path);
  std::vector<FramePair> pairs = MinePairs(ds.frames, options.mining);
  if (pairs.size() > options.max_pairs) pairs.resize(options.max_pairs);
  ds.pairs = pairs;

  std::map<std::int64_t, std::size_t> position_of;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) position_of[ds.frames[i].index] = i;
  std::vector<std::size_t> used;
  for (const FramePair& p : pairs) {
    used.push_back(position_of.at(p.i));
    used.push_back(position_of.at(p.j));
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::vector<WorldPoint> surface;
  if (options.surface_scale > 1) {
    const CameraPath dense = CircularPath(ds.scene, options.frames, options.width * options.surface_scale,
                                          options.height * options.surface_scale, options.path);
    surface = SurfaceFromSequence(RenderSequence(ds.scene, dense));
  } else {
    surface = SurfaceFromSequence(ds.frames);
  }
  const std::vector<OccupancyChunk> chunks = BuildChunks(surface, ds.frames, used, options.voxel);
  std::map<std::size_t, const OccupancyChunk*> chunk_of;
  for (std::size_t k = 0; k < used.size(); ++k) chunk_of[used[k]] = &chunks[k];

  ds.samples.resize(pairs.size());
  ParallelFor(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t pi = position_of.at(pairs[k].i);
      const std::size_t pj = position_of.at(pairs[k].j);
      CorrespondenceSet view = MatchFrames(ds.frames[pi], ds.frames[pj], options.mining.radius, options.mining.pixel_stride);
      ds.samples[k] = MakePairSample(ds.frames[pi], ds.frames[pj], std::move(view), *chunk_of.at(pi), *chunk_of.at(pj),
                                     options.mining.radius);
    }
  });
  return ds;
}

}  // namespace pri3d
