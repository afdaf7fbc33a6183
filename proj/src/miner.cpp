#include "pri3d/miner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "pri3d/error.hpp"
#include "pri3d/parallel.hpp"
#include "pri3d/random.hpp"

namespace pri3d {
namespace {

constexpr std::int64_t kKeyBias = std::int64_t{1} << 20;
constexpr std::uint64_t kKeyMask = (std::uint64_t{1} << 21) - 1;

}  // namespace

std::uint64_t SpatialHashGrid::Key(const CellIndex& c) {
  return (static_cast<std::uint64_t>(c.x + kKeyBias) & kKeyMask) |
         ((static_cast<std::uint64_t>(c.y + kKeyBias) & kKeyMask) << 21) |
         ((static_cast<std::uint64_t>(c.z + kKeyBias) & kKeyMask) << 42);
}

SpatialHashGrid::SpatialHashGrid(std::vector<PixelPoint> points, double cell_size) : cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cell size must be positive");
  const std::int64_t limit = kKeyBias - 1;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const CellIndex c = CellOf(points[i].point.xyz);
    if (std::abs(c.x) > limit || std::abs(c.y) > limit || std::abs(c.z) > limit) {
      throw Error(ErrorCode::kInvalidArgument, "point outside the representable grid extent");
    }
    keyed[i] = {Key(c), static_cast<std::uint32_t>(i)};
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  points_.reserve(points.size());
  ranges_.reserve(points.size());
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      points_.push_back(points[keyed[j].second]);
      ++j;
    }
    ranges_.emplace(keyed[i].first, std::make_pair(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)));
    i = j;
  }
}

CellIndex SpatialHashGrid::CellOf(const Eigen::Vector3d& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

std::span<const PixelPoint> SpatialHashGrid::Cell(const CellIndex& c) const {
  const auto it = ranges_.find(Key(c));
  if (it == ranges_.end()) return {};
  return std::span<const PixelPoint>(points_.data() + it->second.first, it->second.second - it->second.first);
}

SpatialHashGrid BuildGrid(std::vector<PixelPoint> points, double cell) {
  return SpatialHashGrid(std::move(points), cell);
}

std::vector<Match> MatchPoints(std::span<const PixelPoint> source, const SpatialHashGrid& target, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be positive");
  if (target.cell_size() < radius) {
    throw Error(ErrorCode::kInvalidArgument, "grid cell smaller than the matching radius");
  }
  std::vector<std::optional<Match>> found(source.size());
  ParallelFor(source.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PixelPoint& s = source[i];
      double best = std::numeric_limits<double>::infinity();
      const PixelPoint* best_q = nullptr;
      target.ForEachNeighbor(s.point.xyz, [&](const PixelPoint& q) {
        const double d = Distance(s.point, q.point);
        if (d > radius) return;
        if (d < best || (d == best && PixelLess(q.pixel, best_q->pixel))) {
          best = d;
          best_q = &q;
        }
      });
      if (best_q != nullptr) found[i] = Match{s.pixel, best_q->pixel, static_cast<float>(best)};
    }
  });
  std::vector<Match> out;
  for (const auto& m : found) {
    if (m) out.push_back(*m);
  }
  return out;
}

CorrespondenceSet MatchFrames(const CameraFrame& a, const CameraFrame& b, double radius, int pixel_stride) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be positive");
  const std::vector<PixelPoint> source = FrameToWorldPoints(a, pixel_stride);
  std::vector<PixelPoint> target_points = FrameToWorldPoints(b, pixel_stride);
  CorrespondenceSet out;
  out.source_frame = a.index;
  out.target_frame = b.index;
  out.valid_source = source.size();
  out.valid_target = target_points.size();
  const SpatialHashGrid grid(std::move(target_points), radius);
  out.matches = MatchPoints(source, grid, radius);
  return out;
}

double ComputeOverlap(const CorrespondenceSet& corrs) {
  const std::uint64_t total = corrs.valid_source + corrs.valid_target;
  if (total == 0) throw Error(ErrorCode::kZeroValidPixels, "both frames have no valid pixels");
  const double ratio = 2.0 * static_cast<double>(corrs.matches.size()) / static_cast<double>(total);
  return std::clamp(ratio, 0.0, 1.0);
}

std::vector<std::size_t> KeptFramePositions(std::size_t sequence_length, int frame_stride) {
  if (frame_stride < 1) throw Error(ErrorCode::kInvalidArgument, "frame stride must be >= 1");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < sequence_length; i += static_cast<std::size_t>(frame_stride)) kept.push_back(i);
  return kept;
}

std::vector<FramePair> EvaluateCandidatePairs(std::span<const CameraFrame> sequence, const MiningOptions& options) {
  if (sequence.empty()) throw Error(ErrorCode::kInvalidArgument, "sequence is empty");
  if (!(options.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be positive");
  const std::vector<std::size_t> kept = KeptFramePositions(sequence.size(), options.frame_stride);

  // Per-frame point sets and grids are shared read-only by all pairs.
  std::vector<std::vector<PixelPoint>> points(kept.size());
  std::vector<SpatialHashGrid> grids(kept.size());
  ParallelFor(kept.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      points[k] = FrameToWorldPoints(sequence[kept[k]], options.pixel_stride);
      grids[k] = SpatialHashGrid(points[k], options.radius);
    }
  });

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t x = 0; x < kept.size(); ++x) {
    for (std::size_t y = x + 1; y < kept.size(); ++y) candidates.emplace_back(x, y);
  }
  std::vector<FramePair> evaluated(candidates.size());
  // Pairs are distributed over workers; matching inside a pair then runs
  // serially on its worker (ParallelFor does not nest).
  ParallelFor(candidates.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto [x, y] = candidates[c];
      CorrespondenceSet corrs;
      corrs.valid_source = points[x].size();
      corrs.valid_target = points[y].size();
      corrs.matches = MatchPoints(points[x], grids[y], options.radius);
      FramePair& pair = evaluated[c];
      pair.i = sequence[kept[x]].index;
      pair.j = sequence[kept[y]].index;
      pair.correspondences = corrs.matches.size();
      pair.overlap = corrs.valid_source + corrs.valid_target == 0 ? 0.0 : ComputeOverlap(corrs);
    }
  });
  std::sort(evaluated.begin(), evaluated.end(),
            [](const FramePair& l, const FramePair& r) { return std::tie(l.i, l.j) < std::tie(r.i, r.j); });
  return evaluated;
}

std::vector<FramePair> MinePairs(std::span<const CameraFrame> sequence, const MiningOptions& options) {
  std::vector<FramePair> retained;
  for (const FramePair& p : EvaluateCandidatePairs(sequence, options)) {
    if (p.overlap >= options.min_overlap) retained.push_back(p);
  }
  return retained;
}

CorrespondenceSet SubsampleMatches(const CorrespondenceSet& corrs, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  CorrespondenceSet out = corrs;
  const std::size_t n = corrs.matches.size();
  if (k >= n) return out;
  // Partial Fisher-Yates over indices, then restore source order.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.UniformBelow(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  out.matches.clear();
  out.matches.reserve(k);
  for (std::size_t i : idx) out.matches.push_back(corrs.matches[i]);
  return out;
}

}  // namespace pri3d
