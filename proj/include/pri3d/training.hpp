#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pri3d/correspondence.hpp"
#include "pri3d/encoder.hpp"
#include "pri3d/geo_prior.hpp"
#include "pri3d/info_nce.hpp"

namespace pri3d {

/// One training tuple (C_i, C_j, V_i, V_j) with its correspondence sets.
struct PairSample {
  ColorImage image_i;
  ColorImage image_j;
  OccupancyChunk chunk_i;
  OccupancyChunk chunk_j;
  CorrespondenceSet view;  // pixels of i matched into j
  PixelVoxelCorrs geo_i;
  PixelVoxelCorrs geo_j;
};

struct JointLossOptions {
  double temperature = 0.4;
  double w_view = 1.0;
  double w_geo = 1.0;
  /// Whether geo-term gradients also reach the 3D encoder.
  bool geo_grad_into_3d = true;
  bool compute_gradients = true;
};

struct JointLossResult {
  /// loss_sum = w_view·L_view + w_geo·(L_geo_i + L_geo_j); match_count sums
  /// the enabled terms; loss_mean = loss_sum / match_count.
  LossReport total;
  std::optional<LossReport> view;
  std::optional<LossReport> geo_i;
  std::optional<LossReport> geo_j;
  /// d total.loss_sum / d params, flat parameter layout.
  std::vector<double> grad;
};

/// Joint view-invariant + geometric-prior loss on one tuple. Both images go
/// through the shared 2D encoder; feature normalization follows
/// params.normalize(). A term whose weight is zero is skipped entirely.
JointLossResult JointLoss(const EncoderParams& params, const PairSample& sample, const JointLossOptions& options);

/// Index pairs into the half-resolution feature maps for pixel matches.
std::vector<RowPair> ViewRowPairs(const CorrespondenceSet& corrs, int image_width, int image_height);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 8;
  double lr_decay = 0.99;
  std::size_t decay_every = 1000;
  std::size_t iterations = 200;
  double temperature = 0.4;
  std::size_t sample_size = 1024;  // correspondences per term per step
  double w_view = 1.0;
  double w_geo = 1.0;
  double momentum = 0.0;
  bool geo_grad_into_3d = true;
  std::size_t invariance_every = 10;  // 0 disables the periodic score

  /// Throws kInvalidArgument on lr < 0, τ <= 0, negative or all-zero
  /// weights, zero batch size or zero sample size.
  void Validate() const;
  double LearningRateAt(std::size_t step) const;
};

struct TraceRow {
  std::size_t step = 0;
  double lr = 0.0;
  double loss_mean = 0.0;
  double loss_view_mean = 0.0;
  double loss_geo_mean = 0.0;
  std::optional<double> invariance;

  bool operator==(const TraceRow&) const = default;
};

struct TrainResult {
  EncoderParams params;
  std::vector<TraceRow> trace;
};

/// Plain SGD (optional momentum) on the batch-averaged joint loss_mean.
/// Batches walk a seeded permutation of the dataset; correspondences are
/// resampled per step and item from seeded streams. Throws
/// kDivergenceDetected if the loss becomes non-finite.
TrainResult Train(EncoderParams params, std::span<const PairSample> dataset, const TrainConfig& config,
                  std::uint64_t seed);

/// Mean joint loss_mean over a dataset with a fixed correspondence sample.
struct DatasetLoss {
  double loss_mean = 0.0;
  double view_mean = 0.0;
  double geo_mean = 0.0;
};
DatasetLoss EvaluateDatasetLoss(const EncoderParams& params, std::span<const PairSample> dataset,
                                const TrainConfig& config, std::uint64_t seed);

/// Mean cosine of positive pairs minus mean cosine of an equal number of
/// sampled non-corresponding pairs: each a_i is also scored against a
/// uniformly drawn target row other than its own. Result lies in [−2, 2].
struct InvarianceStats {
  double positive = 0.0;
  double negative = 0.0;
  double score = 0.0;
  std::size_t samples = 0;
};
InvarianceStats InvarianceFromFeatures(const FeatureTable& a, const FeatureTable& b, std::span<const RowPair> matches,
                                       std::uint64_t seed);

/// Per-pair invariance scores averaged over the evaluation pairs.
double ViewInvarianceScore(const EncoderParams& params, std::span<const PairSample> pairs, std::uint64_t seed);

}  // namespace pri3d
