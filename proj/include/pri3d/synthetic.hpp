#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pri3d/correspondence.hpp"
#include "pri3d/geometry.hpp"

namespace pri3d {

struct TextureWave {
  Eigen::Vector3d k = Eigen::Vector3d::Zero();      // wave vector, rad/m
  Eigen::Vector3d phase = Eigen::Vector3d::Zero();  // per color channel
  double amplitude = 0.0;

  bool operator==(const TextureWave&) const = default;
};

/// Procedural albedo modulation: each channel is scaled by a sum of plane
/// waves evaluated at the world-space hit point. Several waves with
/// unrelated directions keep local appearance from repeating.
struct SurfaceTexture {
  std::vector<TextureWave> waves;

  Eigen::Vector3d Modulate(const Eigen::Vector3d& albedo, const Eigen::Vector3d& p) const;

  bool operator==(const SurfaceTexture&) const = default;
};

struct SceneBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Ones();
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.5);
  SurfaceTexture texture;

  bool operator==(const SceneBox&) const = default;
};

/// Infinite plane {x : normal·x = offset}.
struct ScenePlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
  Eigen::Vector3d albedo = Eigen::Vector3d::Constant(0.5);
  SurfaceTexture texture;

  bool operator==(const ScenePlane&) const = default;
};

/// A room of six inward-facing planes with axis-aligned boxes inside. All
/// boxes lie within `clear_radius` (horizontal distance) of the room
/// center, so camera paths outside that cylinder never start inside a box.
struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<SceneBox> boxes;
  std::vector<ScenePlane> planes;
  Eigen::Vector3d room_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d room_max = Eigen::Vector3d::Zero();
  double clear_radius = 0.0;

  Eigen::Vector3d RoomCenter() const { return 0.5 * (room_min + room_max); }

  bool operator==(const SceneSpec&) const = default;
};

/// Deterministic in `seed`. Throws kInvalidArgument for n_boxes < 0.
SceneSpec GenerateScene(std::uint64_t seed, int n_boxes);

struct CameraPath {
  std::vector<RigidPose> poses;
  Intrinsics intrinsics;
};

struct CircularPathOptions {
  double radius = 2.0;        // horizontal distance from the room center
  double height = 1.4;        // camera height above the floor plane
  double arc = 2.0 * 3.14159265358979323846;
  double hfov = 1.2;          // radians
  double look_radius = 0.0;   // target circle radius (0 = room center)
  double look_height = 0.6;
  double look_lead = 0.0;     // angular lead of the target over the camera
};

/// Cameras on a horizontal circle around the room center, each looking at a
/// point on a (possibly smaller) target circle.
CameraPath CircularPath(const SceneSpec& scene, int n_frames, int width, int height,
                        const CircularPathOptions& options = {});

struct RenderOptions {
  double far_limit = 10.0;
  /// When > 0, depth is snapped to integer multiples of this value, exactly
  /// as a 16-bit depth image with that unit would store it.
  double depth_quantum = 0.0;
  double depth_noise_std = 0.0;
  std::uint64_t noise_seed = 0;
  double specular = 0.3;
  double shininess = 8.0;
  double ambient = 0.3;
};

struct SurfaceHit {
  double t = 0.0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  // faces the ray origin
  Eigen::Vector3d albedo = Eigen::Vector3d::Zero();  // after texture
};

/// Nearest primitive hit along origin + t·dir, t in (0, max_t].
std::optional<SurfaceHit> CastRay(const SceneSpec& scene, const Eigen::Vector3d& origin,
                                  const Eigen::Vector3d& dir, double max_t);

/// Lambertian + Phong shading of a hit seen from `eye`, in [0, 1] per
/// channel before quantization.
Eigen::Vector3d Shade(const SurfaceHit& hit, const Eigen::Vector3d& eye, const Eigen::Vector3d& light_dir,
                      const RenderOptions& options);

/// Ray-casts one RGB-D frame; depth is camera z of the nearest hit (0 if
/// none within the far limit), color is quantized shading.
CameraFrame RenderFrame(const SceneSpec& scene, const RigidPose& pose, const Intrinsics& k,
                        const Eigen::Vector3d& light_dir, const RenderOptions& options = {},
                        std::int64_t frame_index = 0);

/// Renders every pose of a path with a fixed light direction.
std::vector<CameraFrame> RenderSequence(const SceneSpec& scene, const CameraPath& path,
                                        const RenderOptions& options = {});

Eigen::Vector3d DefaultLightDirection();

/// Smallest distance from `p` to the surface of any primitive.
double DistanceToSurface(const SceneSpec& scene, const Eigen::Vector3d& p);

/// Brute-force O(N_A·N_B) reference for the pixel matching rule: for each
/// valid pixel of A, the nearest valid world point of B within `radius`,
/// ties to the lower row-major B pixel.
CorrespondenceSet OracleCorrespondences(const CameraFrame& a, const CameraFrame& b, double radius,
                                        int stride = 1);

}  // namespace pri3d
