#include "pri3d/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "pri3d/error.hpp"
#include "pri3d/parallel.hpp"

namespace pri3d::io {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kByteOrderTag = 0x01020304u;
constexpr char kCorrMagic[8] = {'P', 'R', 'I', '3', 'D', 'C', 'O', 'R'};
constexpr char kChunkMagic[8] = {'P', 'R', 'I', '3', 'D', 'C', 'H', 'K'};
constexpr char kCkptMagic[8] = {'P', 'R', 'I', '3', 'D', 'E', 'N', 'C'};
constexpr double kPoseRepairTolerance = 1e-4;

class Writer {
 public:
  void Bytes(const char* p, std::size_t n) { out_.append(p, n); }
  template <typename T>
  void Le(T value) {
    using U = std::make_unsigned_t<T>;
    const U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void F32(float v) { Le(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { Le(std::bit_cast<std::uint64_t>(v)); }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kTruncatedFile, "unexpected end of file");
  }
  template <typename T>
  T Le() {
    Need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float F32() { return std::bit_cast<float>(Le<std::uint32_t>()); }
  double F64() { return std::bit_cast<double>(Le<std::uint64_t>()); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void Header(const char (&magic)[8]) {
    if (bytes_.size() < 8) throw Error(ErrorCode::kTruncatedFile, "file shorter than its magic");
    if (std::memcmp(bytes_.data(), magic, 8) != 0) {
      throw Error(ErrorCode::kBadMagic, "unrecognized file magic");
    }
    pos_ = 8;
    const auto version = Le<std::uint32_t>();
    if (version != kBinaryVersion) {
      throw Error(ErrorCode::kUnsupportedVersion, "version " + std::to_string(version));
    }
    if (Le<std::uint32_t>() != kByteOrderTag) throw Error(ErrorCode::kMalformedRecord, "bad byte-order tag");
  }

  void ExpectEnd() const {
    if (pos_ != bytes_.size()) throw Error(ErrorCode::kMalformedRecord, "trailing bytes after records");
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void WriteHeader(Writer& w, const char (&magic)[8]) {
  w.Bytes(magic, 8);
  w.Le<std::uint32_t>(kBinaryVersion);
  w.Le<std::uint32_t>(kByteOrderTag);
}

void RequireFile(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::kMissingFile, path.string());
}

std::string FrameStem(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(index));
  return buf;
}

}  // namespace

std::string ReadFile(const fs::path& path) {
  RequireFile(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
}

std::string CorrespondenceFileName(std::int64_t i, std::int64_t j) {
  return "pair_" + FrameStem(i) + "_" + FrameStem(j) + ".corr";
}

std::string ChunkFileName(std::int64_t frame) { return "chunk_" + FrameStem(frame) + ".chk"; }

// ---------------------------------------------------------------- poses

RigidPose ParsePose(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw Error(ErrorCode::kMalformedPose, "non-numeric token '" + token + "'");
    values.push_back(v);
  }
  if (values.size() != 16) {
    throw Error(ErrorCode::kMalformedPose, "expected 16 values, found " + std::to_string(values.size()));
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = values[static_cast<std::size_t>(r * 4 + c)];
  if (!m.allFinite()) throw Error(ErrorCode::kMalformedPose, "non-finite pose entry");

  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double err = std::max(RigidPose::OrthonormalityError(r), std::abs(r.determinant() - 1.0));
  if (err > RigidPose::kTolerance && err <= kPoseRepairTolerance) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    m.topLeftCorner<3, 3>() = svd.matrixU() * svd.matrixV().transpose();
    std::cerr << "warning: re-orthonormalized pose rotation (error " << err << ")\n";
  } else if (err > kPoseRepairTolerance) {
    throw Error(ErrorCode::kMalformedPose, "rotation not orthonormal (error " + std::to_string(err) + ")");
  }
  return RigidPose::FromMatrix(m);
}

RigidPose LoadPose(const fs::path& path) {
  try {
    return ParsePose(ReadFile(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedPose) throw Error(ErrorCode::kMalformedPose, path.string() + ": " + e.what());
    throw;
  }
}

void SavePose(const fs::path& path, const RigidPose& pose) {
  std::string text;
  char buf[64];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", pose.matrix()(r, c));
      text += buf;
      text += c == 3 ? '\n' : ' ';
    }
  }
  WriteFile(path, text);
}

// ---------------------------------------------------------------- images

DepthMap LoadDepthPng(const fs::path& path, double scale) {
  RequireFile(path);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::kMalformedManifest, "depth scale must be positive");
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error(ErrorCode::kMalformedImage, "cannot decode " + path.string());
  if (raw.type() != CV_16UC1) throw Error(ErrorCode::kMalformedImage, "depth must be 16-bit single channel: " + path.string());
  DepthMap depth(raw.cols, raw.rows);
  for (int v = 0; v < raw.rows; ++v) {
    const auto* row = raw.ptr<std::uint16_t>(v);
    for (int u = 0; u < raw.cols; ++u) depth.at(u, v) = static_cast<double>(row[u]) * scale;
  }
  return depth;
}

void SaveDepthPng(const fs::path& path, const DepthMap& depth, double scale) {
  cv::Mat raw(depth.height(), depth.width(), CV_16UC1);
  for (int v = 0; v < depth.height(); ++v) {
    auto* row = raw.ptr<std::uint16_t>(v);
    for (int u = 0; u < depth.width(); ++u) {
      const long q = std::lround(depth.at(u, v) / scale);
      row[u] = static_cast<std::uint16_t>(std::clamp(q, 0L, 65535L));
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), raw)) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
}

ColorImage LoadColorPng(const fs::path& path) {
  RequireFile(path);
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorCode::kMalformedImage, "cannot decode " + path.string());
  ColorImage img(bgr.cols, bgr.rows);
  for (int v = 0; v < bgr.rows; ++v) {
    const auto* row = bgr.ptr<cv::Vec3b>(v);
    for (int u = 0; u < bgr.cols; ++u) {
      img.at(u, v, 0) = row[u][2];
      img.at(u, v, 1) = row[u][1];
      img.at(u, v, 2) = row[u][0];
    }
  }
  return img;
}

void SaveColorPng(const fs::path& path, const ColorImage& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int v = 0; v < image.height(); ++v) {
    auto* row = bgr.ptr<cv::Vec3b>(v);
    for (int u = 0; u < image.width(); ++u) row[u] = cv::Vec3b(image.at(u, v, 2), image.at(u, v, 1), image.at(u, v, 0));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), bgr)) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
}

DepthMap ResampleDepthNearest(const DepthMap& depth, int width, int height) {
  DepthMap out(width, height);
  for (int v = 0; v < height; ++v) {
    const int sv = static_cast<int>(static_cast<std::int64_t>(v) * depth.height() / height);
    for (int u = 0; u < width; ++u) {
      const int su = static_cast<int>(static_cast<std::int64_t>(u) * depth.width() / width);
      out.at(u, v) = depth.at(su, sv);
    }
  }
  return out;
}

// ---------------------------------------------------------------- manifest

SequenceManifest LoadManifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  const std::string text = ReadFile(file);
  SequenceManifest m;
  try {
    const json j = json::parse(text);
    m.version = j.at("version").get<int>();
    if (m.version != kManifestVersion) {
      throw Error(ErrorCode::kUnsupportedVersion, "manifest version " + std::to_string(m.version));
    }
    m.sequence_id = j.at("sequence_id").get<std::string>();
    const json& k = j.at("intrinsics");
    m.intrinsics.fx = k.at("fx").get<double>();
    m.intrinsics.fy = k.at("fy").get<double>();
    m.intrinsics.cx = k.at("cx").get<double>();
    m.intrinsics.cy = k.at("cy").get<double>();
    m.intrinsics.width = k.at("width").get<int>();
    m.intrinsics.height = k.at("height").get<int>();
    m.depth_scale = j.value("depth_scale", 0.001);
    m.resample_depth = j.value("resample_depth", true);
    for (const json& f : j.at("frames")) {
      m.frames.push_back({f.at("index").get<std::int64_t>(), f.at("color").get<std::string>(),
                          f.at("depth").get<std::string>(), f.at("pose").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedManifest, file.string() + ": " + e.what());
  }
  if (!(m.depth_scale > 0.0) || !std::isfinite(m.depth_scale)) {
    throw Error(ErrorCode::kMalformedManifest, "depth_scale must be positive");
  }
  try {
    m.intrinsics.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedManifest, e.what());
  }
  for (std::size_t i = 1; i < m.frames.size(); ++i) {
    if (m.frames[i].index <= m.frames[i - 1].index) {
      throw Error(ErrorCode::kMalformedManifest, "frame indices must be strictly increasing");
    }
  }
  return m;
}

void SaveManifest(const fs::path& dir, const SequenceManifest& m) {
  json j;
  j["version"] = m.version;
  j["sequence_id"] = m.sequence_id;
  j["intrinsics"] = {{"fx", m.intrinsics.fx}, {"fy", m.intrinsics.fy},         {"cx", m.intrinsics.cx},
                     {"cy", m.intrinsics.cy}, {"width", m.intrinsics.width}, {"height", m.intrinsics.height}};
  j["depth_scale"] = m.depth_scale;
  j["resample_depth"] = m.resample_depth;
  json frames = json::array();
  for (const FrameRecord& f : m.frames) {
    frames.push_back({{"index", f.index}, {"color", f.color}, {"depth", f.depth}, {"pose", f.pose}});
  }
  j["frames"] = frames;
  WriteFile(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<CameraFrame> LoadSequence(const fs::path& path) {
  const fs::path dir = fs::is_directory(path) ? path : path.parent_path();
  const SequenceManifest m = LoadManifest(path);
  std::vector<CameraFrame> frames(m.frames.size());
  ParallelFor(m.frames.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const FrameRecord& rec = m.frames[i];
      CameraFrame& f = frames[i];
      f.index = rec.index;
      f.intrinsics = m.intrinsics;
      f.color = LoadColorPng(dir / rec.color);
      f.depth = LoadDepthPng(dir / rec.depth, m.depth_scale);
      f.pose = LoadPose(dir / rec.pose);
      if (f.color.width() != m.intrinsics.width || f.color.height() != m.intrinsics.height) {
        throw Error(ErrorCode::kMalformedImage, "color size differs from intrinsics: " + rec.color);
      }
      if (f.depth.width() != f.color.width() || f.depth.height() != f.color.height()) {
        if (!m.resample_depth) throw Error(ErrorCode::kDepthSizeMismatch, rec.depth);
        f.depth = ResampleDepthNearest(f.depth, f.color.width(), f.color.height());
      }
    }
  });
  return frames;
}

void SaveSequence(const fs::path& dir, const std::string& sequence_id, std::span<const CameraFrame> frames,
                  double depth_scale) {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "no frames to save");
  SequenceManifest m;
  m.sequence_id = sequence_id;
  m.intrinsics = frames.front().intrinsics;
  m.depth_scale = depth_scale;
  for (const CameraFrame& f : frames) {
    if (!(f.intrinsics == m.intrinsics)) throw Error(ErrorCode::kInvalidArgument, "frames must share intrinsics");
    const std::string stem = FrameStem(f.index);
    FrameRecord rec{f.index, "color/" + stem + ".png", "depth/" + stem + ".png", "pose/" + stem + ".txt"};
    SaveColorPng(dir / rec.color, f.color);
    SaveDepthPng(dir / rec.depth, f.depth, depth_scale);
    SavePose(dir / rec.pose, f.pose);
    m.frames.push_back(rec);
  }
  SaveManifest(dir, m);
}

// ---------------------------------------------------------------- correspondences

std::string EncodeCorrespondences(const CorrespondenceSet& corrs) {
  Writer w;
  WriteHeader(w, kCorrMagic);
  w.Le<std::int64_t>(corrs.source_frame);
  w.Le<std::int64_t>(corrs.target_frame);
  const std::uint64_t total = corrs.valid_source + corrs.valid_target;
  w.F64(total == 0 ? 0.0 : ComputeOverlap(corrs));
  w.Le<std::uint64_t>(corrs.valid_source);
  w.Le<std::uint64_t>(corrs.valid_target);
  w.Le<std::uint64_t>(corrs.matches.size());
  for (const Match& m : corrs.matches) {
    for (int c : {m.a.u, m.a.v, m.b.u, m.b.v}) {
      if (c < 0 || c > 0xFFFF) throw Error(ErrorCode::kInvalidArgument, "pixel coordinate exceeds 16 bits");
      w.Le<std::uint16_t>(static_cast<std::uint16_t>(c));
    }
    w.F32(m.distance);
  }
  return w.Take();
}

CorrespondenceSet DecodeCorrespondences(const std::string& bytes) {
  Reader r(bytes);
  r.Header(kCorrMagic);
  CorrespondenceSet c;
  c.source_frame = r.Le<std::int64_t>();
  c.target_frame = r.Le<std::int64_t>();
  const double overlap = r.F64();
  c.valid_source = r.Le<std::uint64_t>();
  c.valid_target = r.Le<std::uint64_t>();
  const auto count = r.Le<std::uint64_t>();
  if (count > r.remaining() / 12) throw Error(ErrorCode::kTruncatedFile, "record count exceeds file size");
  c.matches.resize(count);
  for (Match& m : c.matches) {
    m.a.u = r.Le<std::uint16_t>();
    m.a.v = r.Le<std::uint16_t>();
    m.b.u = r.Le<std::uint16_t>();
    m.b.v = r.Le<std::uint16_t>();
    m.distance = r.F32();
  }
  r.ExpectEnd();
  const std::uint64_t total = c.valid_source + c.valid_target;
  const double expected = total == 0 ? 0.0 : ComputeOverlap(c);
  if (std::bit_cast<std::uint64_t>(expected) != std::bit_cast<std::uint64_t>(overlap)) {
    throw Error(ErrorCode::kMalformedRecord, "overlap field disagrees with counts");
  }
  for (std::size_t i = 0; i < c.matches.size(); ++i) {
    if (!std::isfinite(c.matches[i].distance) || c.matches[i].distance < 0.0f) {
      throw Error(ErrorCode::kMalformedRecord, "invalid match distance");
    }
    if (i > 0 && !PixelLess(c.matches[i - 1].a, c.matches[i].a)) {
      throw Error(ErrorCode::kMalformedRecord, "matches not sorted by source pixel");
    }
  }
  return c;
}

void SaveCorrespondences(const fs::path& path, const CorrespondenceSet& corrs) {
  WriteFile(path, EncodeCorrespondences(corrs));
}

CorrespondenceSet LoadCorrespondences(const fs::path& path) { return DecodeCorrespondences(ReadFile(path)); }

// ---------------------------------------------------------------- chunks

std::string EncodeChunk(const OccupancyChunk& chunk) {
  Writer w;
  WriteHeader(w, kChunkMagic);
  w.Le<std::int64_t>(chunk.frame);
  for (int a = 0; a < 3; ++a) w.F64(chunk.origin[a]);
  w.F64(chunk.voxel_size);
  for (int a = 0; a < 3; ++a) w.Le<std::int32_t>(chunk.dims[static_cast<std::size_t>(a)]);
  w.Le<std::uint64_t>(chunk.occupied.size());
  for (const VoxelIndex& v : chunk.occupied) {
    w.Le<std::int32_t>(v.x);
    w.Le<std::int32_t>(v.y);
    w.Le<std::int32_t>(v.z);
  }
  return w.Take();
}

OccupancyChunk DecodeChunk(const std::string& bytes) {
  Reader r(bytes);
  r.Header(kChunkMagic);
  OccupancyChunk c;
  c.frame = r.Le<std::int64_t>();
  for (int a = 0; a < 3; ++a) c.origin[a] = r.F64();
  c.voxel_size = r.F64();
  for (int a = 0; a < 3; ++a) c.dims[static_cast<std::size_t>(a)] = r.Le<std::int32_t>();
  const auto count = r.Le<std::uint64_t>();
  if (count > r.remaining() / 12) throw Error(ErrorCode::kTruncatedFile, "record count exceeds file size");
  if (!(c.voxel_size > 0.0) || !c.origin.allFinite() || c.dims[0] <= 0 || c.dims[1] <= 0 || c.dims[2] <= 0) {
    throw Error(ErrorCode::kMalformedRecord, "invalid chunk header");
  }
  c.occupied.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    VoxelIndex& v = c.occupied[i];
    v.x = r.Le<std::int32_t>();
    v.y = r.Le<std::int32_t>();
    v.z = r.Le<std::int32_t>();
    if (!c.InBounds(v)) throw Error(ErrorCode::kMalformedRecord, "voxel index out of bounds");
    if (i > 0 && c.Linear(c.occupied[i - 1]) >= c.Linear(v)) {
      throw Error(ErrorCode::kMalformedRecord, "voxels not sorted and unique");
    }
  }
  r.ExpectEnd();
  return c;
}

void SaveChunk(const fs::path& path, const OccupancyChunk& chunk) { WriteFile(path, EncodeChunk(chunk)); }
OccupancyChunk LoadChunk(const fs::path& path) { return DecodeChunk(ReadFile(path)); }

// ---------------------------------------------------------------- checkpoints

std::string EncodeCheckpoint(const EncoderParams& params) {
  Writer w;
  WriteHeader(w, kCkptMagic);
  w.Le<std::uint32_t>(static_cast<std::uint32_t>(params.feature_dim()));
  w.Le<std::uint32_t>(params.normalize() ? 1u : 0u);
  w.Le<std::uint64_t>(params.size());
  for (double v : params.values()) w.F64(v);
  return w.Take();
}

EncoderParams DecodeCheckpoint(const std::string& bytes) {
  Reader r(bytes);
  r.Header(kCkptMagic);
  const auto dim = r.Le<std::uint32_t>();
  const auto flags = r.Le<std::uint32_t>();
  const auto count = r.Le<std::uint64_t>();
  if (dim == 0 || dim > 4096 || flags > 1) throw Error(ErrorCode::kMalformedRecord, "invalid checkpoint header");
  EncoderParams p(dim, flags == 1);
  if (count != p.size()) throw Error(ErrorCode::kMalformedRecord, "parameter count does not match architecture");
  r.Need(count * 8);
  for (double& v : p.values()) {
    v = r.F64();
    if (!std::isfinite(v)) throw Error(ErrorCode::kMalformedRecord, "non-finite parameter");
  }
  r.ExpectEnd();
  return p;
}

void SaveCheckpoint(const fs::path& path, const EncoderParams& params) { WriteFile(path, EncodeCheckpoint(params)); }
EncoderParams LoadCheckpoint(const fs::path& path) { return DecodeCheckpoint(ReadFile(path)); }

// ---------------------------------------------------------------- pairs / trace

void SavePairs(const fs::path& path, std::span<const FramePair> pairs, const MiningOptions& options) {
  json j;
  j["version"] = kManifestVersion;
  j["frame_stride"] = options.frame_stride;
  j["min_overlap"] = options.min_overlap;
  j["radius"] = options.radius;
  j["pixel_stride"] = options.pixel_stride;
  json list = json::array();
  for (const FramePair& p : pairs) {
    list.push_back({{"i", p.i}, {"j", p.j}, {"overlap", p.overlap}, {"correspondences", p.correspondences}});
  }
  j["pairs"] = list;
  WriteFile(path, j.dump(2) + "\n");
}

std::vector<FramePair> LoadPairs(const fs::path& path) {
  const std::string text = ReadFile(path);
  std::vector<FramePair> pairs;
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != kManifestVersion) throw Error(ErrorCode::kUnsupportedVersion, path.string());
    for (const json& p : j.at("pairs")) {
      FramePair fp;
      fp.i = p.at("i").get<std::int64_t>();
      fp.j = p.at("j").get<std::int64_t>();
      fp.overlap = p.at("overlap").get<double>();
      fp.correspondences = p.at("correspondences").get<std::uint64_t>();
      if (fp.i >= fp.j || !(fp.overlap >= 0.0 && fp.overlap <= 1.0)) {
        throw Error(ErrorCode::kMalformedRecord, "invalid pair entry");
      }
      pairs.push_back(fp);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedManifest, path.string() + ": " + e.what());
  }
  return pairs;
}

void SaveTrace(const fs::path& path, std::span<const TraceRow> trace) {
  std::string out = "step,lr,loss_view_mean,loss_geo_mean,invariance_score\n";
  char buf[160];
  for (const TraceRow& r : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,", r.step, r.lr, r.loss_view_mean, r.loss_geo_mean);
    out += buf;
    if (r.invariance) {
      std::snprintf(buf, sizeof(buf), "%.17g", *r.invariance);
      out += buf;
    }
    out += '\n';
  }
  WriteFile(path, out);
}

}  // namespace pri3d::io
