#include "pri3d/geometry.hpp"

#include <cmath>
#include <string>

#include "pri3d/error.hpp"

namespace pri3d {

void Intrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside image");
  }
}

Intrinsics Intrinsics::FromHorizontalFov(int width, int height, double hfov) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.fx = 0.5 * width / std::tan(0.5 * hfov);
  k.fy = k.fx;
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  k.Validate();
  return k;
}

double RigidPose::OrthonormalityError(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

RigidPose RigidPose::FromMatrix(const Eigen::Matrix4d& m, double tolerance) {
  if (!m.allFinite()) throw Error(ErrorCode::kMalformedPose, "non-finite pose entry");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw Error(ErrorCode::kMalformedPose, "last row must be (0, 0, 0, 1)");
  }
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double ortho = OrthonormalityError(r);
  if (ortho > tolerance) {
    throw Error(ErrorCode::kMalformedPose, "rotation not orthonormal (error " + std::to_string(ortho) + ")");
  }
  if (std::abs(r.determinant() - 1.0) > tolerance) {
    throw Error(ErrorCode::kMalformedPose, "rotation determinant is not +1");
  }
  return RigidPose(m);
}

RigidPose RigidPose::FromRotationTranslation(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return FromMatrix(m);
}

RigidPose RigidPose::LookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                            const Eigen::Vector3d& world_up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(world_up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return FromRotationTranslation(r, eye);
}

DepthMap::DepthMap(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

void DepthMap::Validate() const {
  for (double d : values_) {
    if (!std::isfinite(d) || d < 0.0) throw Error(ErrorCode::kInvalidDepth, "depth must be finite and >= 0");
  }
}

ColorImage::ColorImage(int width, int height)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 0) {}

void CameraFrame::Validate() const {
  intrinsics.Validate();
  if (color.width() != depth.width() || color.height() != depth.height()) {
    throw Error(ErrorCode::kDepthSizeMismatch, "color and depth dimensions differ");
  }
  if (depth.width() != intrinsics.width || depth.height() != intrinsics.height) {
    throw Error(ErrorCode::kInvalidArgument, "intrinsics size does not match images");
  }
  depth.Validate();
}

CameraPoint Backproject(double u, double v, double depth, const Intrinsics& k) {
  if (!std::isfinite(depth) || depth <= 0.0) throw Error(ErrorCode::kInvalidDepth, "depth must be positive");
  if (!k.Contains(u, v)) throw Error(ErrorCode::kOutOfBounds, "pixel outside image");
  return CameraPoint((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth);
}

WorldPoint ToWorld(const CameraPoint& p, const RigidPose& pose) {
  return WorldPoint(pose.rotation() * p.xyz + pose.translation());
}

CameraPoint ToCamera(const WorldPoint& p, const RigidPose& pose) {
  return CameraPoint(pose.rotation().transpose() * (p.xyz - pose.translation()));
}

std::optional<Projection> TryProject(const WorldPoint& p, const RigidPose& pose, const Intrinsics& k) {
  const CameraPoint c = ToCamera(p, pose);
  if (!(c.z() > 0.0)) return std::nullopt;
  Projection out{k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy, c.z()};
  if (!k.Contains(out.u, out.v)) return std::nullopt;
  return out;
}

Projection Project(const WorldPoint& p, const RigidPose& pose, const Intrinsics& k) {
  const CameraPoint c = ToCamera(p, pose);
  if (!(c.z() > 0.0)) throw Error(ErrorCode::kBehindCamera, "point behind camera");
  Projection out{k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy, c.z()};
  if (!k.Contains(out.u, out.v)) throw Error(ErrorCode::kOutOfView, "point projects outside image");
  return out;
}

std::vector<PixelPoint> FrameToWorldPoints(const CameraFrame& frame, int stride) {
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  std::vector<PixelPoint> out;
  const DepthMap& depth = frame.depth;
  out.reserve(CountValidPixels(depth, stride));
  for (int v = 0; v < depth.height(); v += stride) {
    for (int u = 0; u < depth.width(); u += stride) {
      const double d = depth.at(u, v);
      if (!(d > 0.0)) continue;
      out.push_back({Pixel{u, v}, ToWorld(Backproject(u, v, d, frame.intrinsics), frame.pose)});
    }
  }
  return out;
}

std::size_t CountValidPixels(const DepthMap& depth, int stride) {
  std::size_t n = 0;
  for (int v = 0; v < depth.height(); v += stride) {
    for (int u = 0; u < depth.width(); u += stride) {
      if (depth.at(u, v) > 0.0) ++n;
    }
  }
  return n;
}

}  // namespace pri3d
