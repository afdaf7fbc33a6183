#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pri3d {

/// Pinhole intrinsics without distortion. Pixel centers sit at integer
/// coordinates.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws kInvalidArgument unless fx, fy > 0 and the principal point lies
  /// strictly inside the image.
  void Validate() const;

  // Pixel centers sit on integers, so the image spans [-0.5, width - 0.5).
  bool Contains(double u, double v) const {
    return u >= -0.5 && v >= -0.5 && u < width - 0.5 && v < height - 0.5;
  }

  /// Intrinsics for a centered principal point and a horizontal field of
  /// view in radians, square pixels.
  static Intrinsics FromHorizontalFov(int width, int height, double hfov);

  bool operator==(const Intrinsics&) const = default;
};

/// Camera-to-world rigid transform.
class RigidPose {
 public:
  static constexpr double kTolerance = 1e-6;

  RigidPose() : m_(Eigen::Matrix4d::Identity()) {}

  /// Validates orthonormality, det(R) = +1 and the homogeneous last row.
  /// Throws kMalformedPose on violation.
  static RigidPose FromMatrix(const Eigen::Matrix4d& m, double tolerance = kTolerance);
  static RigidPose FromRotationTranslation(const Eigen::Matrix3d& r, const Eigen::Vector3d& t);

  /// Camera at `eye` looking at `target`; camera x right, y down, z forward.
  static RigidPose LookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                          const Eigen::Vector3d& world_up = Eigen::Vector3d::UnitZ());

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m_.topRightCorner<3, 1>(); }

  /// Largest |RᵀR − I| entry; used by loaders to grade pose quality.
  static double OrthonormalityError(const Eigen::Matrix3d& r);

  bool operator==(const RigidPose& o) const { return m_ == o.m_; }

 private:
  explicit RigidPose(const Eigen::Matrix4d& m) : m_(m) {}
  Eigen::Matrix4d m_;
};

enum class CoordinateFrame { kCamera, kWorld };

/// 3D point tagged at compile time with the frame it is expressed in.
template <CoordinateFrame Frame>
struct Point3 {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();

  Point3() = default;
  explicit Point3(const Eigen::Vector3d& v) : xyz(v) {}
  Point3(double x, double y, double z) : xyz(x, y, z) {}

  double x() const { return xyz.x(); }
  double y() const { return xyz.y(); }
  double z() const { return xyz.z(); }

  bool operator==(const Point3& o) const { return xyz == o.xyz; }
};

using CameraPoint = Point3<CoordinateFrame::kCamera>;
using WorldPoint = Point3<CoordinateFrame::kWorld>;

inline double Distance(const WorldPoint& a, const WorldPoint& b) {
  const double dx = a.xyz.x() - b.xyz.x();
  const double dy = a.xyz.y() - b.xyz.y();
  const double dz = a.xyz.z() - b.xyz.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Pixel {
  int u = 0;
  int v = 0;

  bool operator==(const Pixel&) const = default;
};

/// Depth in meters, row-major; 0 marks a missing measurement.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int u, int v) const { return values_[Index(u, v)]; }
  double& at(int u, int v) { return values_[Index(u, v)]; }
  const std::vector<double>& values() const { return values_; }

  /// Throws kInvalidDepth on negative or non-finite entries.
  void Validate() const;

  bool operator==(const DepthMap&) const = default;

 private:
  std::size_t Index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Interleaved 8-bit RGB, row-major.
class ColorImage {
 public:
  ColorImage() = default;
  ColorImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int u, int v, int c) const { return data_[Index(u, v) + c]; }
  std::uint8_t& at(int u, int v, int c) { return data_[Index(u, v) + c]; }
  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const ColorImage&) const = default;

 private:
  std::size_t Index(int u, int v) const {
    return (static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u)) * 3;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct CameraFrame {
  std::int64_t index = 0;
  ColorImage color;
  DepthMap depth;
  Intrinsics intrinsics;
  RigidPose pose;

  /// Checks dimensions agree across color, depth and intrinsics.
  void Validate() const;

  bool operator==(const CameraFrame&) const = default;
};

/// ((u − cx)·d/fx, (v − cy)·d/fy, d). Throws kInvalidDepth for d <= 0 or
/// non-finite, kOutOfBounds outside the image.
CameraPoint Backproject(double u, double v, double depth, const Intrinsics& k);

WorldPoint ToWorld(const CameraPoint& p, const RigidPose& pose);
CameraPoint ToCamera(const WorldPoint& p, const RigidPose& pose);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// World point to continuous pixel coordinates and camera depth. Throws
/// kBehindCamera for depth <= 0, kOutOfView outside [0,w)×[0,h).
Projection Project(const WorldPoint& p, const RigidPose& pose, const Intrinsics& k);

/// Non-throwing variant of Project.
std::optional<Projection> TryProject(const WorldPoint& p, const RigidPose& pose, const Intrinsics& k);

struct PixelPoint {
  Pixel pixel;
  WorldPoint point;
};

/// Back-projects every valid depth pixel on a stride grid (u, v multiples of
/// stride) into world space, in row-major pixel order.
std::vector<PixelPoint> FrameToWorldPoints(const CameraFrame& frame, int stride = 1);

/// Number of valid pixels on the stride grid.
std::size_t CountValidPixels(const DepthMap& depth, int stride = 1);

}  // namespace pri3d
