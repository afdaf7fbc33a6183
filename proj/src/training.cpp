#include "pri3d/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pri3d/error.hpp"
#include "pri3d/miner.hpp"
#include "pri3d/parallel.hpp"
#include "pri3d/random.hpp"

namespace pri3d {
namespace {

// One voxel row per match, so a voxel hit by several pixels appears that many
// times among the candidates, like duplicated targets in the view term.
struct GeoTerm {
  std::vector<VoxelIndex> voxels;
  std::vector<RowPair> pairs;  // (feature-map row, voxel row)
};

GeoTerm BuildGeoTerm(const PixelVoxelCorrs& corrs, int width, int height) {
  GeoTerm term;
  term.voxels.reserve(corrs.matches.size());
  const int w2 = width / 2;
  for (std::size_t i = 0; i < corrs.matches.size(); ++i) {
    const PixelVoxelMatch& m = corrs.matches[i];
    const Pixel c = PixelToFeatureCoord(m.pixel.u, m.pixel.v, width, height);
    term.voxels.push_back(m.voxel);
    term.pairs.push_back({static_cast<std::size_t>(c.v) * w2 + c.u, i});
  }
  return term;
}

std::vector<std::size_t> SampleSorted(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.UniformBelow(n - i))]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PixelVoxelCorrs SubsampleGeo(const PixelVoxelCorrs& corrs, std::size_t k, std::uint64_t seed) {
  PixelVoxelCorrs out;
  out.frame = corrs.frame;
  for (std::size_t i : SampleSorted(corrs.matches.size(), k, seed)) out.matches.push_back(corrs.matches[i]);
  return out;
}

void AddScaled(std::vector<double>& dst, const std::vector<double>& src, double w) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
}

double Cosine(std::span<const double> x, std::span<const double> y) {
  double xy = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0) return 0.0;
  return xy / std::sqrt(xx * yy);
}

struct SampledCorrs {
  CorrespondenceSet view;
  PixelVoxelCorrs geo_i;
  PixelVoxelCorrs geo_j;
};

SampledCorrs Subsample(const PairSample& s, std::size_t k, std::uint64_t seed) {
  return {SubsampleMatches(s.view, k, MixSeeds(seed, 1)), SubsampleGeo(s.geo_i, k, MixSeeds(seed, 2)),
          SubsampleGeo(s.geo_j, k, MixSeeds(seed, 3))};
}

JointLossResult JointLossParts(const EncoderParams& params, const PairSample& s, const CorrespondenceSet& view_corrs,
                               const PixelVoxelCorrs& geo_i_corrs, const PixelVoxelCorrs& geo_j_corrs,
                               const JointLossOptions& options) {
  if (options.w_view < 0.0 || options.w_geo < 0.0 || (options.w_view == 0.0 && options.w_geo == 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0 and not both zero");
  }
  if (s.image_i.width() != s.image_j.width() || s.image_i.height() != s.image_j.height()) {
    throw Error(ErrorCode::kInvalidArgument, "paired images must share dimensions");
  }
  const int width = s.image_i.width();
  const int height = s.image_i.height();
  const bool grads = options.compute_gradients;
  const InfoNceOptions nce{options.temperature, params.normalize(), grads};

  ImageActivations act_i;
  ImageActivations act_j;
  const FeatureMap feat_i = EncodeImageRaw(params, s.image_i, grads ? &act_i : nullptr);
  const FeatureMap feat_j = EncodeImageRaw(params, s.image_j, grads ? &act_j : nullptr);
  std::vector<double> g_img_i;
  std::vector<double> g_img_j;
  if (grads) {
    g_img_i.assign(feat_i.values.size(), 0.0);
    g_img_j.assign(feat_j.values.size(), 0.0);
  }

  JointLossResult result;
  if (grads) result.grad.assign(params.size(), 0.0);
  double loss_sum = 0.0;
  std::size_t count = 0;

  if (options.w_view > 0.0) {
    const std::vector<RowPair> pairs = ViewRowPairs(view_corrs, width, height);
    LossReport r = PointInfoNce(feat_i.Table(), feat_j.Table(), pairs, nce);
    loss_sum += options.w_view * r.loss_sum;
    count += r.match_count;
    if (grads) {
      AddScaled(g_img_i, r.grad_a, options.w_view);
      AddScaled(g_img_j, r.grad_b, options.w_view);
    }
    result.view = std::move(r);
  }

  if (options.w_geo > 0.0) {
    auto geo = [&](const PixelVoxelCorrs& corrs, const OccupancyChunk& chunk, const FeatureMap& feat,
                   std::vector<double>& g_img) {
      const GeoTerm term = BuildGeoTerm(corrs, width, height);
      VoxelActivations act;
      const VoxelFeatures vf = EncodeVoxelsRaw(params, chunk, term.voxels, grads ? &act : nullptr);
      LossReport r = PointInfoNce(feat.Table(), vf.Table(), term.pairs, nce);
      loss_sum += options.w_geo * r.loss_sum;
      count += r.match_count;
      if (grads) {
        AddScaled(g_img, r.grad_a, options.w_geo);
        if (options.geo_grad_into_3d) {
          std::vector<double> g_vox(r.grad_b.size());
          for (std::size_t i = 0; i < g_vox.size(); ++i) g_vox[i] = options.w_geo * r.grad_b[i];
          BackwardVoxels(params, act, g_vox, result.grad);
        }
      }
      return r;
    };
    result.geo_i = geo(geo_i_corrs, s.chunk_i, feat_i, g_img_i);
    result.geo_j = geo(geo_j_corrs, s.chunk_j, feat_j, g_img_j);
  }

  if (grads) {
    BackwardImage(params, act_i, g_img_i, result.grad);
    BackwardImage(params, act_j, g_img_j, result.grad);
  }
  result.total.loss_sum = loss_sum;
  result.total.match_count = count;
  result.total.loss_mean = loss_sum / static_cast<double>(count);
  result.total.temperature = options.temperature;
  return result;
}

}  // namespace

std::vector<RowPair> ViewRowPairs(const CorrespondenceSet& corrs, int image_width, int image_height) {
  std::vector<RowPair> pairs;
  pairs.reserve(corrs.matches.size());
  const std::size_t w2 = static_cast<std::size_t>(image_width / 2);
  for (const Match& m : corrs.matches) {
    const Pixel a = PixelToFeatureCoord(m.a.u, m.a.v, image_width, image_height);
    const Pixel b = PixelToFeatureCoord(m.b.u, m.b.v, image_width, image_height);
    pairs.push_back({static_cast<std::size_t>(a.v) * w2 + a.u, static_cast<std::size_t>(b.v) * w2 + b.u});
  }
  return pairs;
}

JointLossResult JointLoss(const EncoderParams& params, const PairSample& sample, const JointLossOptions& options) {
  return JointLossParts(params, sample, sample.view, sample.geo_i, sample.geo_j, options);
}

void TrainConfig::Validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be >= 0");
  }
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  if (w_view < 0.0 || w_geo < 0.0 || (w_view == 0.0 && w_geo == 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0 and not both zero");
  }
  if (batch_size == 0 || sample_size == 0 || decay_every == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch size, sample size and decay interval must be positive");
  }
  if (!(lr_decay > 0.0) || momentum < 0.0 || momentum >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid decay or momentum");
  }
}

double TrainConfig::LearningRateAt(std::size_t step) const {
  return learning_rate * std::pow(lr_decay, static_cast<double>(step / decay_every));
}

namespace {

JointLossOptions LossOptionsFor(const TrainConfig& config, bool grads) {
  JointLossOptions o;
  o.temperature = config.temperature;
  o.w_view = config.w_view;
  o.w_geo = config.w_geo;
  o.geo_grad_into_3d = config.geo_grad_into_3d;
  o.compute_gradients = grads;
  return o;
}

double GeoMean(const JointLossResult& r) {
  if (!r.geo_i || !r.geo_j) return 0.0;
  return 0.5 * (r.geo_i->loss_mean + r.geo_j->loss_mean);
}

}  // namespace

TrainResult Train(EncoderParams params, std::span<const PairSample> dataset, const TrainConfig& config,
                  std::uint64_t seed) {
  config.Validate();
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "training dataset is empty");
  TrainResult result;
  const JointLossOptions loss_options = LossOptionsFor(config, true);
  std::vector<double> velocity(params.size(), 0.0);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng(MixSeeds(seed, 0x5EED));
  std::size_t cursor = order.size();

  for (std::size_t step = 0; step < config.iterations; ++step) {
    std::vector<std::size_t> batch(config.batch_size);
    for (std::size_t& item : batch) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.UniformBelow(i))]);
        }
        cursor = 0;
      }
      item = order[cursor++];
    }

    TraceRow row;
    row.step = step;
    row.lr = config.LearningRateAt(step);
    if (config.invariance_every > 0 &&
        (step % config.invariance_every == 0 || step + 1 == config.iterations)) {
      row.invariance = ViewInvarianceScore(params, dataset, MixSeeds(seed, 0xE7A1));
    }

    std::vector<JointLossResult> items(batch.size());
    ParallelFor(batch.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t b = begin; b < end; ++b) {
        const PairSample& s = dataset[batch[b]];
        const SampledCorrs c = Subsample(s, config.sample_size, MixSeeds(seed, step * config.batch_size + b));
        items[b] = JointLossParts(params, s, c.view, c.geo_i, c.geo_j, loss_options);
      }
    });

    // Single merge point, fixed order.
    std::vector<double> grad(params.size(), 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const JointLossResult& r : items) {
      if (!std::isfinite(r.total.loss_mean)) {
        throw Error(ErrorCode::kDivergenceDetected, "loss became non-finite at step " + std::to_string(step));
      }
      row.loss_mean += r.total.loss_mean * inv_batch;
      if (r.view) row.loss_view_mean += r.view->loss_mean * inv_batch;
      row.loss_geo_mean += GeoMean(r) * inv_batch;
      AddScaled(grad, r.grad, inv_batch / static_cast<double>(r.total.match_count));
    }
    result.trace.push_back(row);

    std::span<double> values = params.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      velocity[i] = config.momentum * velocity[i] + grad[i];
      values[i] -= row.lr * velocity[i];
    }
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kDivergenceDetected, "parameters became non-finite at step " + std::to_string(step));
      }
    }
  }
  result.params = std::move(params);
  return result;
}

DatasetLoss EvaluateDatasetLoss(const EncoderParams& params, std::span<const PairSample> dataset,
                                const TrainConfig& config, std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  const JointLossOptions options = LossOptionsFor(config, false);
  std::vector<JointLossResult> items(dataset.size());
  ParallelFor(dataset.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SampledCorrs c = Subsample(dataset[i], config.sample_size, MixSeeds(seed, i));
      items[i] = JointLossParts(params, dataset[i], c.view, c.geo_i, c.geo_j, options);
    }
  });
  DatasetLoss out;
  const double inv = 1.0 / static_cast<double>(dataset.size());
  for (const JointLossResult& r : items) {
    out.loss_mean += r.total.loss_mean * inv;
    if (r.view) out.view_mean += r.view->loss_mean * inv;
    out.geo_mean += GeoMean(r) * inv;
  }
  return out;
}

InvarianceStats InvarianceFromFeatures(const FeatureTable& a, const FeatureTable& b, std::span<const RowPair> matches,
                                       std::uint64_t seed) {
  if (matches.empty()) throw Error(ErrorCode::kEmptyMatchSet, "no positive pairs to score");
  if (b.rows < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two target features");
  Rng rng(seed);
  InvarianceStats s;
  for (const RowPair& m : matches) {
    if (m.a >= a.rows || m.b >= b.rows) throw Error(ErrorCode::kOutOfBounds, "match references a missing row");
    s.positive += Cosine(a.Row(m.a), b.Row(m.b));
    // Any target row other than the true correspondence.
    std::size_t k = static_cast<std::size_t>(rng.UniformBelow(b.rows - 1));
    if (k >= m.b) ++k;
    s.negative += Cosine(a.Row(m.a), b.Row(k));
  }
  s.samples = matches.size();
  s.positive /= static_cast<double>(s.samples);
  s.negative /= static_cast<double>(s.samples);
  s.score = s.positive - s.negative;
  return s;
}

double ViewInvarianceScore(const EncoderParams& params, std::span<const PairSample> pairs, std::uint64_t seed) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no evaluation pairs");
  std::vector<double> scores(pairs.size());
  ParallelFor(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PairSample& p = pairs[i];
      const FeatureMap fa = EncodeImageRaw(params, p.image_i);
      const FeatureMap fb = EncodeImageRaw(params, p.image_j);
      const std::vector<RowPair> rows = ViewRowPairs(p.view, p.image_i.width(), p.image_i.height());
      scores[i] = InvarianceFromFeatures(fa.Table(), fb.Table(), rows, MixSeeds(seed, i)).score;
    }
  });
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

}  // namespace pri3d
