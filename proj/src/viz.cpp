#include "pri3d/viz.hpp"

#include <algorithm>
#include <numeric>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "pri3d/error.hpp"
#include "pri3d/random.hpp"

namespace pri3d {

PairVisualization VisualizePair(const CameraFrame& a, const CameraFrame& b, const CorrespondenceSet& corrs,
                                std::size_t sample, std::uint64_t seed, double radius) {
  if (corrs.source_frame != a.index || corrs.target_frame != b.index) {
    throw Error(ErrorCode::kInvalidArgument, "correspondences do not reference these frames");
  }
  const int height = std::max(a.color.height(), b.color.height());
  cv::Mat canvas(height, a.color.width() + b.color.width(), CV_8UC3, cv::Scalar(0, 0, 0));
  auto blit = [&canvas](const ColorImage& img, int x0) {
    for (int v = 0; v < img.height(); ++v)
      for (int u = 0; u < img.width(); ++u)
        canvas.at<cv::Vec3b>(v, x0 + u) = cv::Vec3b(img.at(u, v, 0), img.at(u, v, 1), img.at(u, v, 2));
  };
  blit(a.color, 0);
  blit(b.color, a.color.width());

  // Uniform sample without replacement, drawn in source order.
  std::vector<std::size_t> idx(corrs.matches.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t k = std::min(sample, idx.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.UniformBelow(idx.size() - i))]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  PairVisualization out;
  for (std::size_t i : idx) {
    const Match& m = corrs.matches[i];
    if (!a.intrinsics.Contains(m.a.u, m.a.v) || !b.intrinsics.Contains(m.b.u, m.b.v)) {
      throw Error(ErrorCode::kOutOfBounds, "correspondence pixel outside the image");
    }
    const double da = a.depth.at(m.a.u, m.a.v);
    const double db = b.depth.at(m.b.u, m.b.v);
    if (!(da > 0.0) || !(db > 0.0)) {
      ++out.rejected;
      continue;
    }
    const WorldPoint pa = ToWorld(Backproject(m.a.u, m.a.v, da, a.intrinsics), a.pose);
    const WorldPoint pb = ToWorld(Backproject(m.b.u, m.b.v, db, b.intrinsics), b.pose);
    const double d = Distance(pa, pb);
    if (d > radius) {
      ++out.rejected;
      continue;
    }
    const double t = std::clamp(d / radius, 0.0, 1.0);
    const cv::Scalar color(255.0 * t, 255.0 * (1.0 - t), 0.0);  // RGB order in the canvas
    cv::line(canvas, cv::Point(m.a.u, m.a.v), cv::Point(a.color.width() + m.b.u, m.b.v), color, 1, cv::LINE_8);
    out.lines.push_back({m.a, m.b, d});
  }

  out.canvas = ColorImage(canvas.cols, canvas.rows);
  for (int v = 0; v < canvas.rows; ++v)
    for (int u = 0; u < canvas.cols; ++u)
      for (int c = 0; c < 3; ++c) out.canvas.at(u, v, c) = canvas.at<cv::Vec3b>(v, u)[c];
  return out;
}

}  // namespace pri3d
