#include "pri3d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pri3d/error.hpp"
#include "pri3d/parallel.hpp"
#include "pri3d/random.hpp"

namespace pri3d {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinT = 1e-9;

SurfaceTexture RandomTexture(Rng& rng) {
  constexpr int kWaves = 6;
  SurfaceTexture t;
  double total = 0.0;
  for (int i = 0; i < kWaves; ++i) {
    TextureWave w;
    const double theta = rng.Uniform(0.0, kPi);
    const double phi = rng.Uniform(0.0, 2.0 * kPi);
    const double freq = rng.Uniform(6.0, 24.0);
    w.k = Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)) * freq;
    w.phase = Eigen::Vector3d(rng.Uniform(0.0, 2.0 * kPi), rng.Uniform(0.0, 2.0 * kPi), rng.Uniform(0.0, 2.0 * kPi));
    w.amplitude = rng.Uniform(0.2, 1.0);
    total += w.amplitude;
    t.waves.push_back(w);
  }
  for (TextureWave& w : t.waves) w.amplitude *= 0.5 / total;
  return t;
}

Eigen::Vector3d RandomAlbedo(Rng& rng) {
  return Eigen::Vector3d(rng.Uniform(0.2, 0.9), rng.Uniform(0.2, 0.9), rng.Uniform(0.2, 0.9));
}

// Slab test. Only entry hits count: the camera never starts inside a box.
bool IntersectBox(const SceneBox& box, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double& t_hit,
                  Eigen::Vector3d& normal) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double lo = box.center[i] - box.half_extents[i];
    const double hi = box.center[i] + box.half_extents[i];
    if (d[i] == 0.0) {
      if (o[i] < lo || o[i] > hi) return false;
      continue;
    }
    double t0 = (lo - o[i]) / d[i];
    double t1 = (hi - o[i]) / d[i];
    double s = -1.0;
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1.0;
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = i;
      sign = s;
    }
    t_far = std::min(t_far, t1);
  }
  if (axis < 0 || t_near > t_far || t_near <= kMinT) return false;
  t_hit = t_near;
  normal = Eigen::Vector3d::Zero();
  normal[axis] = sign;
  return true;
}

}  // namespace

Eigen::Vector3d SurfaceTexture::Modulate(const Eigen::Vector3d& albedo, const Eigen::Vector3d& p) const {
  Eigen::Vector3d pattern = Eigen::Vector3d::Constant(0.5);
  for (const TextureWave& w : waves) {
    const double a = w.k.dot(p);
    for (int c = 0; c < 3; ++c) pattern[c] += w.amplitude * std::sin(a + w.phase[c]);
  }
  return albedo.cwiseProduct(Eigen::Vector3d::Constant(0.15) + 0.85 * pattern);
}

SceneSpec GenerateScene(std::uint64_t seed, int n_boxes) {
  if (n_boxes < 0) throw Error(ErrorCode::kInvalidArgument, "n_boxes must be >= 0");
  Rng rng(seed);
  SceneSpec scene;
  scene.seed = seed;
  const double half_x = rng.Uniform(2.6, 3.4);
  const double half_y = rng.Uniform(2.6, 3.4);
  const double ceiling = rng.Uniform(2.6, 3.0);
  scene.room_min = Eigen::Vector3d(-half_x, -half_y, 0.0);
  scene.room_max = Eigen::Vector3d(half_x, half_y, ceiling);
  scene.clear_radius = 1.5;

  // Inward normals: n·x = offset on the wall, n·x > offset inside the room.
  const Eigen::Vector3d normals[6] = {Eigen::Vector3d::UnitZ(),  -Eigen::Vector3d::UnitZ(),
                                      Eigen::Vector3d::UnitX(),  -Eigen::Vector3d::UnitX(),
                                      Eigen::Vector3d::UnitY(),  -Eigen::Vector3d::UnitY()};
  const double offsets[6] = {0.0, -ceiling, -half_x, -half_x, -half_y, -half_y};
  for (int i = 0; i < 6; ++i) {
    ScenePlane plane;
    plane.normal = normals[i];
    plane.offset = offsets[i];
    plane.albedo = RandomAlbedo(rng);
    plane.texture = RandomTexture(rng);
    scene.planes.push_back(plane);
  }

  for (int i = 0; i < n_boxes; ++i) {
    SceneBox box;
    box.half_extents = Eigen::Vector3d(rng.Uniform(0.1, 0.4), rng.Uniform(0.1, 0.4), rng.Uniform(0.1, 0.6));
    const double reach = std::hypot(box.half_extents.x(), box.half_extents.y());
    const double r = rng.Uniform(0.0, scene.clear_radius - reach);
    const double angle = rng.Uniform(0.0, 2.0 * kPi);
    const double lift = rng.Uniform() < 0.25 ? rng.Uniform(0.0, 0.8) : 0.0;
    box.center = Eigen::Vector3d(r * std::cos(angle), r * std::sin(angle), box.half_extents.z() + lift);
    box.albedo = RandomAlbedo(rng);
    box.texture = RandomTexture(rng);
    scene.boxes.push_back(box);
  }
  return scene;
}

CameraPath CircularPath(const SceneSpec& scene, int n_frames, int width, int height,
                        const CircularPathOptions& options) {
  if (n_frames < 0) throw Error(ErrorCode::kInvalidArgument, "n_frames must be >= 0");
  if (options.radius <= scene.clear_radius) {
    throw Error(ErrorCode::kInvalidArgument, "camera circle intersects the box region");
  }
  CameraPath path;
  path.intrinsics = Intrinsics::FromHorizontalFov(width, height, options.hfov);
  const Eigen::Vector3d center = scene.RoomCenter();
  for (int i = 0; i < n_frames; ++i) {
    const double angle = options.arc * i / std::max(1, n_frames);
    const Eigen::Vector3d eye(center.x() + options.radius * std::cos(angle),
                              center.y() + options.radius * std::sin(angle), options.height);
    const double target_angle = angle + options.look_lead;
    const Eigen::Vector3d target(center.x() + options.look_radius * std::cos(target_angle),
                                 center.y() + options.look_radius * std::sin(target_angle), options.look_height);
    path.poses.push_back(RigidPose::LookAt(eye, target));
  }
  return path;
}

std::optional<SurfaceHit> CastRay(const SceneSpec& scene, const Eigen::Vector3d& origin,
                                  const Eigen::Vector3d& dir, double max_t) {
  double best_t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_normal = Eigen::Vector3d::Zero();
  Eigen::Vector3d best_albedo = Eigen::Vector3d::Zero();
  const SurfaceTexture* best_texture = nullptr;

  for (const ScenePlane& plane : scene.planes) {
    const double denom = plane.normal.dot(dir);
    if (denom == 0.0) continue;
    const double t = (plane.offset - plane.normal.dot(origin)) / denom;
    if (t > kMinT && t < best_t) {
      best_t = t;
      best_normal = denom < 0.0 ? plane.normal : Eigen::Vector3d(-plane.normal);
      best_albedo = plane.albedo;
      best_texture = &plane.texture;
    }
  }
  for (const SceneBox& box : scene.boxes) {
    double t;
    Eigen::Vector3d n;
    if (IntersectBox(box, origin, dir, t, n) && t < best_t) {
      best_t = t;
      best_normal = n;
      best_albedo = box.albedo;
      best_texture = &box.texture;
    }
  }
  if (best_texture == nullptr || best_t > max_t) return std::nullopt;
  SurfaceHit hit;
  hit.t = best_t;
  hit.point = origin + best_t * dir;
  hit.normal = best_normal;
  hit.albedo = best_texture->Modulate(best_albedo, hit.point);
  return hit;
}

Eigen::Vector3d Shade(const SurfaceHit& hit, const Eigen::Vector3d& eye, const Eigen::Vector3d& light_dir,
                      const RenderOptions& options) {
  const double n_dot_l = hit.normal.dot(light_dir);
  const double diffuse = std::max(0.0, n_dot_l);
  const Eigen::Vector3d view = (eye - hit.point).normalized();
  const Eigen::Vector3d reflected = 2.0 * n_dot_l * hit.normal - light_dir;
  const double lobe = n_dot_l > 0.0 ? std::pow(std::max(0.0, reflected.dot(view)), options.shininess) : 0.0;
  Eigen::Vector3d c = hit.albedo * (options.ambient + (1.0 - options.ambient) * diffuse) +
                      Eigen::Vector3d::Constant(options.specular * lobe);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::Vector3d DefaultLightDirection() { return Eigen::Vector3d(0.3, 0.5, 1.0).normalized(); }

CameraFrame RenderFrame(const SceneSpec& scene, const RigidPose& pose, const Intrinsics& k,
                        const Eigen::Vector3d& light_dir, const RenderOptions& options, std::int64_t frame_index) {
  k.Validate();
  CameraFrame frame;
  frame.index = frame_index;
  frame.intrinsics = k;
  frame.pose = pose;
  frame.depth = DepthMap(k.width, k.height);
  frame.color = ColorImage(k.width, k.height);
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d eye = pose.translation();
  const Eigen::Vector3d light = light_dir.normalized();

  ParallelFor(static_cast<std::size_t>(k.height), [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t row = row_begin; row < row_end; ++row) {
      const int v = static_cast<int>(row);
      Rng noise(MixSeeds(options.noise_seed, row));
      for (int u = 0; u < k.width; ++u) {
        // Ray parameter equals camera-space depth because the z component is 1.
        const Eigen::Vector3d dir = r * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        const auto hit = CastRay(scene, eye, dir, options.far_limit);
        const double jitter = options.depth_noise_std > 0.0 ? options.depth_noise_std * noise.Normal() : 0.0;
        if (!hit) continue;
        double depth = hit->t + jitter;
        if (options.depth_quantum > 0.0) {
          const long steps = std::lround(depth / options.depth_quantum);
          depth = static_cast<double>(static_cast<std::uint16_t>(std::clamp(steps, 0L, 65535L))) *
                  options.depth_quantum;
        }
        if (!(depth > 0.0)) continue;
        frame.depth.at(u, v) = depth;
        const Eigen::Vector3d c = Shade(*hit, eye, light, options);
        for (int ch = 0; ch < 3; ++ch) {
          frame.color.at(u, v, ch) = static_cast<std::uint8_t>(std::lround(255.0 * c[ch]));
        }
      }
    }
  });
  return frame;
}

std::vector<CameraFrame> RenderSequence(const SceneSpec& scene, const CameraPath& path,
                                        const RenderOptions& options) {
  std::vector<CameraFrame> frames;
  frames.reserve(path.poses.size());
  for (std::size_t i = 0; i < path.poses.size(); ++i) {
    frames.push_back(RenderFrame(scene, path.poses[i], path.intrinsics, DefaultLightDirection(), options,
                                 static_cast<std::int64_t>(i)));
  }
  return frames;
}

double DistanceToSurface(const SceneSpec& scene, const Eigen::Vector3d& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const ScenePlane& plane : scene.planes) best = std::min(best, std::abs(plane.normal.dot(p) - plane.offset));
  for (const SceneBox& box : scene.boxes) {
    const Eigen::Vector3d q = (p - box.center).cwiseAbs() - box.half_extents;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    best = std::min(best, std::abs(outside + inside));
  }
  return best;
}

CorrespondenceSet OracleCorrespondences(const CameraFrame& a, const CameraFrame& b, double radius, int stride) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be positive");
  const std::vector<PixelPoint> pa = FrameToWorldPoints(a, stride);
  const std::vector<PixelPoint> pb = FrameToWorldPoints(b, stride);
  CorrespondenceSet out;
  out.source_frame = a.index;
  out.target_frame = b.index;
  out.valid_source = pa.size();
  out.valid_target = pb.size();

  std::vector<std::optional<Match>> found(pa.size());
  ParallelFor(pa.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      // pb is in row-major order, so a strict improvement test keeps the
      // lowest target index among equal distances.
      for (std::size_t j = 0; j < pb.size(); ++j) {
        const double d = Distance(pa[i].point, pb[j].point);
        if (d <= radius && d < best) {
          best = d;
          best_j = j;
        }
      }
      if (std::isfinite(best)) found[i] = Match{pa[i].pixel, pb[best_j].pixel, static_cast<float>(best)};
    }
  });
  for (const auto& m : found) {
    if (m) out.matches.push_back(*m);
  }
  return out;
}

}  // namespace pri3d
