#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "pri3d/geometry.hpp"

namespace pri3d {

/// One pixel-pixel match; `distance` is the world-space gap in meters at
/// storage precision.
struct Match {
  Pixel a;
  Pixel b;
  float distance = 0.0f;

  bool operator==(const Match&) const = default;
};

/// Row-major order of pixels, i.e. the order of linearized indices v·W + u.
inline bool PixelLess(const Pixel& l, const Pixel& r) { return std::tie(l.v, l.u) < std::tie(r.v, r.u); }

/// Matches from a source frame into a target frame, sorted by source pixel,
/// each source pixel at most once. Valid counts are taken on the same pixel
/// stride the matching used.
struct CorrespondenceSet {
  std::int64_t source_frame = 0;
  std::int64_t target_frame = 0;
  std::uint64_t valid_source = 0;
  std::uint64_t valid_target = 0;
  std::vector<Match> matches;

  std::size_t size() const { return matches.size(); }
  bool empty() const { return matches.empty(); }

  bool operator==(const CorrespondenceSet&) const = default;
};

}  // namespace pri3d
