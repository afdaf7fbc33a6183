#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pri3d/geo_prior.hpp"
#include "pri3d/geometry.hpp"
#include "pri3d/info_nce.hpp"

namespace pri3d {

/// Parameters of the two small encoders, stored flat so optimizers and
/// gradient checks can treat them as one vector.
///
/// 2D path: conv3×3(3→16, stride 2, pad 1) → tanh → conv3×3(16→32, pad 1)
///          → tanh → conv1×1(32→d)
/// 3D path: 27-value occupancy neighborhood → affine(27→32) → tanh
///          → affine(32→d)
class EncoderParams {
 public:
  static constexpr std::size_t kInChannels = 3;
  static constexpr std::size_t kConv1Channels = 16;
  static constexpr std::size_t kConv2Channels = 32;
  static constexpr std::size_t kNeighborhood = 27;
  static constexpr std::size_t kHidden3d = 32;

  struct Block {
    std::size_t weights;  // offset of the weight block
    std::size_t biases;   // offset of the bias block
  };

  EncoderParams() : EncoderParams(32) {}
  explicit EncoderParams(std::size_t feature_dim, bool normalize = false);

  /// Scaled-uniform initialization (bound sqrt(6 / fan_in)), zero biases. The
  /// two output layers are further scaled by 1/sqrt(feature_dim).
  static EncoderParams Random(std::size_t feature_dim, std::uint64_t seed, bool normalize = false);

  std::size_t feature_dim() const { return feature_dim_; }
  bool normalize() const { return normalize_; }
  void set_normalize(bool on) { normalize_ = on; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  Block conv1() const { return conv1_; }
  Block conv2() const { return conv2_; }
  Block conv3() const { return conv3_; }
  Block fc1() const { return fc1_; }
  Block fc2() const { return fc2_; }
  /// First offset of the 3D path; everything before belongs to the 2D path.
  std::size_t first_3d_offset() const { return fc1_.weights; }

  bool operator==(const EncoderParams& o) const {
    return feature_dim_ == o.feature_dim_ && normalize_ == o.normalize_ && values_ == o.values_;
  }

 private:
  std::size_t feature_dim_;
  bool normalize_;
  Block conv1_{}, conv2_{}, conv3_{}, fc1_{}, fc2_{};
  std::vector<double> values_;
};

/// Per-pixel features at half the input resolution, row-major HWC.
struct FeatureMap {
  int width = 0;   // input width / 2
  int height = 0;  // input height / 2
  std::size_t dim = 0;
  bool normalized = false;
  std::vector<double> values;

  FeatureTable Table() const { return {values, static_cast<std::size_t>(width) * height, dim}; }
  std::size_t RowOf(int fx, int fy) const { return static_cast<std::size_t>(fy) * width + fx; }
};

/// Features for a list of voxels of one chunk; row r belongs to keys[r].
struct VoxelFeatures {
  std::vector<VoxelIndex> keys;
  std::size_t dim = 0;
  bool normalized = false;
  std::vector<double> values;

  FeatureTable Table() const { return {values, keys.size(), dim}; }
};

/// Intermediate activations kept for the backward pass.
struct ImageActivations {
  int in_width = 0;
  int in_height = 0;
  std::vector<double> input;    // H × W × 3, bytes mapped to [-1, 1]
  std::vector<double> hidden1;  // H/2 × W/2 × 16, after tanh
  std::vector<double> hidden2;  // H/2 × W/2 × 32, after tanh
};

struct VoxelActivations {
  std::vector<double> neighborhoods;  // n × 27
  std::vector<double> hidden;         // n × 32, after tanh
};

/// Half-resolution feature cell of an input pixel: (floor(u/2), floor(v/2)).
/// Throws kOutOfBounds outside the image.
Pixel PixelToFeatureCoord(int u, int v, int width, int height);

/// Raw (never normalized) forward pass; fills `cache` when non-null.
/// Throws kOddDimensions for odd image sizes.
FeatureMap EncodeImageRaw(const EncoderParams& p, const ColorImage& image, ImageActivations* cache = nullptr);

/// Forward pass honoring p.normalize(); throws kNormalizationOfZeroVector if
/// any feature is exactly zero while normalizing.
FeatureMap EncodeImage(const EncoderParams& p, const ColorImage& image);

/// Accumulates d loss / d params into `grad` (same layout as params) given
/// d loss / d raw features.
void BackwardImage(const EncoderParams& p, const ImageActivations& cache, std::span<const double> grad_features,
                   std::span<double> grad);

/// 3×3×3 occupancy around `v` (missing neighbors read as 0), ordered with x
/// fastest, then y, then z.
std::array<double, 27> OccupancyNeighborhood(const OccupancyChunk& chunk, const VoxelIndex& v);

VoxelFeatures EncodeVoxelsRaw(const EncoderParams& p, const OccupancyChunk& chunk,
                              std::span<const VoxelIndex> voxels, VoxelActivations* cache = nullptr);

/// Features for every occupied voxel. Throws kEmptyChunk.
VoxelFeatures EncodeChunk(const EncoderParams& p, const OccupancyChunk& chunk);

void BackwardVoxels(const EncoderParams& p, const VoxelActivations& cache, std::span<const double> grad_features,
                    std::span<double> grad);

/// L2-normalizes rows in place. Throws kNormalizationOfZeroVector.
void NormalizeRows(std::vector<double>& values, std::size_t dim);

}  // namespace pri3d
