#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pri3d/correspondence.hpp"
#include "pri3d/geometry.hpp"

namespace pri3d {

struct DrawnLine {
  Pixel a;
  Pixel b;
  double world_distance = 0.0;  // recomputed from depth and pose while drawing
};

struct PairVisualization {
  ColorImage canvas;  // frame A on the left, frame B on the right
  std::vector<DrawnLine> lines;
  std::size_t rejected = 0;  // sampled matches that failed re-validation
};

/// Side-by-side rendering of two frames with `sample` randomly chosen
/// correspondences drawn as lines, colored from green (distance 0) to red
/// (distance == radius). Each endpoint pair is re-projected to world space
/// before drawing; pairs farther apart than `radius` are not drawn.
PairVisualization VisualizePair(const CameraFrame& a, const CameraFrame& b, const CorrespondenceSet& corrs,
                                std::size_t sample, std::uint64_t seed, double radius = 0.02);

}  // namespace pri3d
