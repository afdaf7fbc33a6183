// Command-line front end: synthetic data generation, pair/correspondence
// mining, chunking, training, evaluation and visualization.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pri3d/error.hpp"
#include "pri3d/io.hpp"
#include "pri3d/miner.hpp"
#include "pri3d/pipeline.hpp"
#include "pri3d/random.hpp"
#include "pri3d/synthetic.hpp"
#include "pri3d/training.hpp"
#include "pri3d/viz.hpp"

namespace fs = std::filesystem;
using namespace pri3d;

namespace {

std::map<std::int64_t, std::size_t> PositionsByIndex(const std::vector<CameraFrame>& frames) {
  std::map<std::int64_t, std::size_t> pos;
  for (std::size_t i = 0; i < frames.size(); ++i) pos[frames[i].index] = i;
  return pos;
}

std::size_t PositionOf(const std::map<std::int64_t, std::size_t>& pos, std::int64_t index) {
  const auto it = pos.find(index);
  if (it == pos.end()) throw Error(ErrorCode::kInvalidArgument, "frame " + std::to_string(index) + " not in sequence");
  return it->second;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  int boxes = 6;
  int frames = 100;
  int width = 64;
  int height = 48;
  double path_radius = 2.0;
  double arc = 2.0 * 3.14159265358979323846;
  double depth_noise = 0.0;
  std::string out;
};

int RunSynth(const SynthArgs& a) {
  const SceneSpec scene = GenerateScene(a.seed, a.boxes);
  CircularPathOptions path_options;
  path_options.radius = a.path_radius;
  path_options.arc = a.arc;
  const CameraPath path = CircularPath(scene, a.frames, a.width, a.height, path_options);
  RenderOptions render;
  render.depth_quantum = 0.001;
  render.depth_noise_std = a.depth_noise;
  render.noise_seed = a.seed;
  const std::vector<CameraFrame> frames = RenderSequence(scene, path, render);
  io::SaveSequence(a.out, "synthetic_" + std::to_string(a.seed), frames, 0.001);
  std::cout << "wrote " << frames.size() << " frames to " << a.out << "\n";
  return 0;
}

struct MinePairsArgs {
  std::string seq;
  MiningOptions options;
  std::string out;
};

int RunMinePairs(const MinePairsArgs& a) {
  const std::vector<CameraFrame> frames = io::LoadSequence(a.seq);
  const std::vector<FramePair> pairs = MinePairs(frames, a.options);
  io::SavePairs(a.out, pairs, a.options);
  std::cout << "retained " << pairs.size() << " pairs\n";
  return 0;
}

struct MineCorrsArgs {
  std::string seq;
  std::string pairs;
  std::string out;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  double radius = 0.02;
  int pixel_stride = 1;
};

int RunMineCorrs(const MineCorrsArgs& a) {
  const std::vector<CameraFrame> frames = io::LoadSequence(a.seq);
  const auto pos = PositionsByIndex(frames);
  const std::vector<FramePair> pairs = io::LoadPairs(a.pairs);
  fs::create_directories(a.out);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const FramePair& p = pairs[k];
    CorrespondenceSet c = MatchFrames(frames[PositionOf(pos, p.i)], frames[PositionOf(pos, p.j)], a.radius, a.pixel_stride);
    if (a.sample > 0) c = SubsampleMatches(c, a.sample, MixSeeds(a.seed, k));
    io::SaveCorrespondences(fs::path(a.out) / io::CorrespondenceFileName(p.i, p.j), c);
  }
  std::cout << "wrote " << pairs.size() << " correspondence files\n";
  return 0;
}

struct ChunkArgs {
  std::string seq;
  double voxel = 0.02;
  int stride = 25;
  std::string pairs;
  std::string out;
};

int RunChunk(const ChunkArgs& a) {
  const std::vector<CameraFrame> frames = io::LoadSequence(a.seq);
  std::vector<std::size_t> positions;
  if (!a.pairs.empty()) {
    const auto pos = PositionsByIndex(frames);
    for (const FramePair& p : io::LoadPairs(a.pairs)) {
      positions.push_back(PositionOf(pos, p.i));
      positions.push_back(PositionOf(pos, p.j));
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  } else {
    positions = KeptFramePositions(frames.size(), a.stride);
  }
  const std::vector<OccupancyChunk> chunks = BuildChunks(frames, positions, a.voxel);
  fs::create_directories(a.out);
  for (const OccupancyChunk& c : chunks) io::SaveChunk(fs::path(a.out) / io::ChunkFileName(c.frame), c);
  std::cout << "wrote " << chunks.size() << " chunks\n";
  return 0;
}

std::vector<fs::path> SortedFiles(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kMissingFile, dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct TrainArgs {
  std::string seq;
  std::string corrs;
  std::string chunks;
  std::string out;
  std::string trace;
  TrainConfig config;
  std::uint64_t seed = 0;
  std::size_t dim = 32;
  bool normalize = false;
  double radius = 0.02;
};

int RunTrain(TrainArgs a) {
  const std::vector<CameraFrame> frames = io::LoadSequence(a.seq);
  const auto pos = PositionsByIndex(frames);
  std::vector<PairSample> dataset;
  for (const fs::path& file : SortedFiles(a.corrs, ".corr")) {
    CorrespondenceSet c = io::LoadCorrespondences(file);
    const OccupancyChunk ci = io::LoadChunk(fs::path(a.chunks) / io::ChunkFileName(c.source_frame));
    const OccupancyChunk cj = io::LoadChunk(fs::path(a.chunks) / io::ChunkFileName(c.target_frame));
    const CameraFrame& fi = frames[PositionOf(pos, c.source_frame)];
    const CameraFrame& fj = frames[PositionOf(pos, c.target_frame)];
    dataset.push_back(MakePairSample(fi, fj, std::move(c), ci, cj, a.radius));
  }
  const TrainResult result = Train(EncoderParams::Random(a.dim, a.seed, a.normalize), dataset, a.config, a.seed);
  io::SaveCheckpoint(a.out, result.params);
  io::SaveTrace(a.trace.empty() ? a.out + ".csv" : a.trace, result.trace);
  if (!result.trace.empty()) {
    std::cout << "trained " << result.trace.size() << " steps, loss_mean " << result.trace.front().loss_mean << " -> "
              << result.trace.back().loss_mean << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string seq;
  std::string corrs;
  std::string out;
  MiningOptions mining;
  std::uint64_t seed = 0;
};

int RunEvalInvariance(const EvalArgs& a) {
  const EncoderParams params = io::LoadCheckpoint(a.ckpt);
  const std::vector<CameraFrame> frames = io::LoadSequence(a.seq);
  const auto pos = PositionsByIndex(frames);
  std::vector<CorrespondenceSet> sets;
  if (!a.corrs.empty()) {
    for (const fs::path& f : SortedFiles(a.corrs, ".corr")) sets.push_back(io::LoadCorrespondences(f));
  } else {
    for (const FramePair& p : MinePairs(frames, a.mining)) {
      sets.push_back(MatchFrames(frames[PositionOf(pos, p.i)], frames[PositionOf(pos, p.j)], a.mining.radius,
                                 a.mining.pixel_stride));
    }
  }
  std::string csv = "i,j,matches,positive_cos,negative_cos,score\n";
  double total = 0.0;
  std::size_t n = 0;
  char buf[256];
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const CorrespondenceSet& c = sets[k];
    if (c.empty()) continue;
    const CameraFrame& fi = frames[PositionOf(pos, c.source_frame)];
    const CameraFrame& fj = frames[PositionOf(pos, c.target_frame)];
    const FeatureMap fa = EncodeImageRaw(params, fi.color);
    const FeatureMap fb = EncodeImageRaw(params, fj.color);
    const auto rows = ViewRowPairs(c, fi.color.width(), fi.color.height());
    const InvarianceStats s = InvarianceFromFeatures(fa.Table(), fb.Table(), rows, MixSeeds(a.seed, k));
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%zu,%.17g,%.17g,%.17g\n", static_cast<long long>(c.source_frame),
                  static_cast<long long>(c.target_frame), c.size(), s.positive, s.negative, s.score);
    csv += buf;
    total += s.score;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyMatchSet, "no pairs with correspondences to evaluate");
  std::snprintf(buf, sizeof(buf), "mean,,,,,%.17g\n", total / static_cast<double>(n));
  csv += buf;
  io::WriteFile(a.out, csv);
  std::cout << "mean view-invariance score " << total / static_cast<double>(n) << " over " << n << " pairs\n";
  return 0;
}

struct VizArgs {
  std::string seq;
  std::string pair;
  std::string corrs;
  std::size_t sample = 50;
  std::uint64_t seed = 0;
  double radius = 0.02;
  std::string out;
};

int RunViz(const VizArgs& a) {
  const auto comma = a.pair.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--pair expects I,J");
  const std::int64_t i = std::stoll(a.pair.substr(0, comma));
  const std::int64_t j = std::stoll(a.pair.substr(comma + 1));
  const std::vector<CameraFrame> frames = io::LoadSequence(a.seq);
  const auto pos = PositionsByIndex(frames);
  const CorrespondenceSet c = io::LoadCorrespondences(a.corrs);
  if (c.source_frame != i || c.target_frame != j) {
    throw Error(ErrorCode::kInvalidArgument, "correspondence file belongs to a different pair");
  }
  const PairVisualization vis = VisualizePair(frames[PositionOf(pos, i)], frames[PositionOf(pos, j)], c, a.sample, a.seed, a.radius);
  io::SaveColorPng(a.out, vis.canvas);
  std::cout << "drew " << vis.lines.size() << " correspondences (" << vis.rejected << " rejected)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pri3d: geometric pre-training tools for RGB-D sequences"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic RGB-D sequence");
  synth_cmd->add_option("--seed", synth.seed, "scene seed")->required();
  synth_cmd->add_option("--boxes", synth.boxes, "number of boxes")->required();
  synth_cmd->add_option("--frames", synth.frames, "number of frames")->required();
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--width", synth.width, "image width");
  synth_cmd->add_option("--height", synth.height, "image height");
  synth_cmd->add_option("--path-radius", synth.path_radius, "camera circle radius (m)");
  synth_cmd->add_option("--arc", synth.arc, "camera path arc (rad)");
  synth_cmd->add_option("--depth-noise", synth.depth_noise, "depth noise std (m), default off");

  MinePairsArgs mp;
  auto* mp_cmd = app.add_subcommand("mine-pairs", "find overlapping frame pairs");
  mp_cmd->add_option("--seq", mp.seq, "sequence directory")->required();
  mp_cmd->add_option("--stride", mp.options.frame_stride, "keep every N-th frame");
  mp_cmd->add_option("--min-overlap", mp.options.min_overlap, "minimum overlap ratio");
  mp_cmd->add_option("--radius", mp.options.radius, "matching radius (m)");
  mp_cmd->add_option("--pixel-stride", mp.options.pixel_stride, "depth pixel sampling stride");
  mp_cmd->add_option("--out", mp.out, "output pairs.json")->required();

  MineCorrsArgs mc;
  auto* mc_cmd = app.add_subcommand("mine-corrs", "write pixel correspondences for mined pairs");
  mc_cmd->add_option("--seq", mc.seq, "sequence directory")->required();
  mc_cmd->add_option("--pairs", mc.pairs, "pairs.json")->required();
  mc_cmd->add_option("--out", mc.out, "output directory")->required();
  mc_cmd->add_option("--sample", mc.sample, "keep at most K matches per pair (0 = all)");
  mc_cmd->add_option("--seed", mc.seed, "sampling seed");
  mc_cmd->add_option("--radius", mc.radius, "matching radius (m)");
  mc_cmd->add_option("--pixel-stride", mc.pixel_stride, "depth pixel sampling stride");

  ChunkArgs ch;
  auto* ch_cmd = app.add_subcommand("chunk", "crop occupancy chunks from view frusta");
  ch_cmd->add_option("--seq", ch.seq, "sequence directory")->required();
  ch_cmd->add_option("--voxel", ch.voxel, "voxel size (m)");
  ch_cmd->add_option("--stride", ch.stride, "chunk every N-th frame");
  ch_cmd->add_option("--pairs", ch.pairs, "chunk only frames referenced by pairs.json");
  ch_cmd->add_option("--out", ch.out, "output directory")->required();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "train the encoders with the joint contrastive loss");
  tr_cmd->add_option("--seq", tr.seq, "sequence directory")->required();
  tr_cmd->add_option("--corrs", tr.corrs, "correspondence directory")->required();
  tr_cmd->add_option("--chunks", tr.chunks, "chunk directory")->required();
  tr_cmd->add_option("--iters", tr.config.iterations, "iterations")->required();
  tr_cmd->add_option("--lr", tr.config.learning_rate, "learning rate");
  tr_cmd->add_option("--batch", tr.config.batch_size, "batch size (pairs)");
  tr_cmd->add_option("--tau", tr.config.temperature, "temperature");
  tr_cmd->add_option("--w-view", tr.config.w_view, "view-invariant loss weight");
  tr_cmd->add_option("--w-geo", tr.config.w_geo, "geometric-prior loss weight");
  tr_cmd->add_option("--k", tr.config.sample_size, "correspondences per term per step");
  tr_cmd->add_option("--momentum", tr.config.momentum, "SGD momentum");
  tr_cmd->add_option("--dim", tr.dim, "feature dimension");
  tr_cmd->add_flag("--normalize", tr.normalize, "L2-normalize features before the dot product");
  tr_cmd->add_option("--seed", tr.seed, "seed")->required();
  tr_cmd->add_option("--out", tr.out, "checkpoint path")->required();
  tr_cmd->add_option("--trace", tr.trace, "loss trace CSV (default: <out>.csv)");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval-invariance", "score view invariance of a checkpoint");
  ev_cmd->add_option("--ckpt", ev.ckpt, "checkpoint")->required();
  ev_cmd->add_option("--seq", ev.seq, "sequence directory")->required();
  ev_cmd->add_option("--out", ev.out, "report CSV")->required();
  ev_cmd->add_option("--corrs", ev.corrs, "correspondence directory (default: mine pairs)");
  ev_cmd->add_option("--stride", ev.mining.frame_stride, "frame stride when mining");
  ev_cmd->add_option("--min-overlap", ev.mining.min_overlap, "minimum overlap when mining");
  ev_cmd->add_option("--radius", ev.mining.radius, "matching radius (m)");
  ev_cmd->add_option("--seed", ev.seed, "negative sampling seed");

  VizArgs vz;
  auto* vz_cmd = app.add_subcommand("viz", "draw correspondences between two frames");
  vz_cmd->add_option("--seq", vz.seq, "sequence directory")->required();
  vz_cmd->add_option("--pair", vz.pair, "frame indices I,J")->required();
  vz_cmd->add_option("--corrs", vz.corrs, "correspondence file")->required();
  vz_cmd->add_option("--sample", vz.sample, "number of lines");
  vz_cmd->add_option("--seed", vz.seed, "sampling seed");
  vz_cmd->add_option("--radius", vz.radius, "re-validation radius (m)");
  vz_cmd->add_option("--out", vz.out, "output PNG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return RunSynth(synth);
    if (mp_cmd->parsed()) return RunMinePairs(mp);
    if (mc_cmd->parsed()) return RunMineCorrs(mc);
    if (ch_cmd->parsed()) return RunChunk(ch);
    if (tr_cmd->parsed()) return RunTrain(tr);
    if (ev_cmd->parsed()) return RunEvalInvariance(ev);
    if (vz_cmd->parsed()) return RunViz(vz);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
