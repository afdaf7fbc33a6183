#include "pri3d/encoder.hpp"

#include <cmath>

#include "pri3d/error.hpp"
#include "pri3d/random.hpp"

namespace pri3d {
namespace {

constexpr std::size_t kC0 = EncoderParams::kInChannels;
constexpr std::size_t kC1 = EncoderParams::kConv1Channels;
constexpr std::size_t kC2 = EncoderParams::kConv2Channels;
constexpr std::size_t kN3 = EncoderParams::kNeighborhood;
constexpr std::size_t kH3 = EncoderParams::kHidden3d;

// Conv weights are stored (out, in, ky, kx); the forward loops want
// (ky, kx, in, out) so the innermost loop runs over output channels.
std::vector<double> TransposeConv(const double* w, std::size_t cout, std::size_t cin) {
  std::vector<double> t(cout * cin * 9);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t i = 0; i < cin; ++i)
      for (std::size_t k = 0; k < 9; ++k) t[(k * cin + i) * cout + o] = w[(o * cin + i) * 9 + k];
  return t;
}

// 3×3 convolution with zero padding 1 over an HWC tensor.
void Conv3x3(const std::vector<double>& in, int in_w, int in_h, std::size_t cin, int stride, const double* weights,
             const double* bias, std::size_t cout, int out_w, int out_h, std::vector<double>& out) {
  const std::vector<double> wt = TransposeConv(weights, cout, cin);
  out.assign(static_cast<std::size_t>(out_w) * out_h * cout, 0.0);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double* z = out.data() + (static_cast<std::size_t>(y) * out_w + x) * cout;
      for (std::size_t o = 0; o < cout; ++o) z[o] = bias[o];
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = stride * y + ky - 1;
        if (sy < 0 || sy >= in_h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = stride * x + kx - 1;
          if (sx < 0 || sx >= in_w) continue;
          const double* src = in.data() + (static_cast<std::size_t>(sy) * in_w + sx) * cin;
          const double* w = wt.data() + static_cast<std::size_t>(ky * 3 + kx) * cin * cout;
          for (std::size_t i = 0; i < cin; ++i) {
            const double s = src[i];
            const double* wi = w + i * cout;
            for (std::size_t o = 0; o < cout; ++o) z[o] += s * wi[o];
          }
        }
      }
    }
  }
}

// Gradient of a 3×3 convolution given dZ; accumulates weight/bias grads
// and, when grad_in is non-null, d input.
void Conv3x3Backward(const std::vector<double>& in, int in_w, int in_h, std::size_t cin, int stride,
                     const double* weights, std::size_t cout, int out_w, int out_h, const std::vector<double>& dz,
                     double* grad_w, double* grad_b, std::vector<double>* grad_in) {
  if (grad_in != nullptr) grad_in->assign(in.size(), 0.0);
  // Gradient buffer in transposed layout, folded back at the end.
  std::vector<double> gwt(cout * cin * 9, 0.0);
  const std::vector<double> wt = TransposeConv(weights, cout, cin);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double* g = dz.data() + (static_cast<std::size_t>(y) * out_w + x) * cout;
      for (std::size_t o = 0; o < cout; ++o) grad_b[o] += g[o];
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = stride * y + ky - 1;
        if (sy < 0 || sy >= in_h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = stride * x + kx - 1;
          if (sx < 0 || sx >= in_w) continue;
          const std::size_t src_off = (static_cast<std::size_t>(sy) * in_w + sx) * cin;
          const std::size_t k_off = static_cast<std::size_t>(ky * 3 + kx) * cin * cout;
          for (std::size_t i = 0; i < cin; ++i) {
            const double s = in[src_off + i];
            double* gw = gwt.data() + k_off + i * cout;
            const double* w = wt.data() + k_off + i * cout;
            double acc = 0.0;
            for (std::size_t o = 0; o < cout; ++o) {
              gw[o] += s * g[o];
              acc += w[o] * g[o];
            }
            if (grad_in != nullptr) (*grad_in)[src_off + i] += acc;
          }
        }
      }
    }
  }
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t i = 0; i < cin; ++i)
      for (std::size_t k = 0; k < 9; ++k) grad_w[(o * cin + i) * 9 + k] += gwt[(k * cin + i) * cout + o];
}

void Dense(const double* in, std::size_t cin, const double* w, const double* b, std::size_t cout, double* out) {
  for (std::size_t o = 0; o < cout; ++o) {
    double z = b[o];
    const double* wo = w + o * cin;
    for (std::size_t i = 0; i < cin; ++i) z += wo[i] * in[i];
    out[o] = z;
  }
}

}  // namespace

EncoderParams::EncoderParams(std::size_t feature_dim, bool normalize)
    : feature_dim_(feature_dim), normalize_(normalize) {
  if (feature_dim == 0) throw Error(ErrorCode::kInvalidArgument, "feature dimension must be positive");
  std::size_t offset = 0;
  auto take = [&offset](std::size_t w, std::size_t b) {
    Block blk{offset, offset + w};
    offset += w + b;
    return blk;
  };
  conv1_ = take(kC1 * kC0 * 9, kC1);
  conv2_ = take(kC2 * kC1 * 9, kC2);
  conv3_ = take(feature_dim * kC2, feature_dim);
  fc1_ = take(kH3 * kN3, kH3);
  fc2_ = take(feature_dim * kH3, feature_dim);
  values_.assign(offset, 0.0);
}

EncoderParams EncoderParams::Random(std::size_t feature_dim, std::uint64_t seed, bool normalize) {
  EncoderParams p(feature_dim, normalize);
  Rng rng(seed);
  // Output layers are scaled by 1/sqrt(dim) so features start near unit norm
  // and the initial logits stay in the range of the temperature.
  auto fill = [&](Block b, std::size_t count, std::size_t fan_in, double gain = 1.0) {
    const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) p.values_[b.weights + i] = rng.Uniform(-bound, bound);
  };
  fill(p.conv1_, kC1 * kC0 * 9, kC0 * 9);
  fill(p.conv2_, kC2 * kC1 * 9, kC1 * 9);
  fill(p.conv3_, feature_dim * kC2, kC2, 1.0 / std::sqrt(static_cast<double>(feature_dim)));
  fill(p.fc1_, kH3 * kN3, kN3);
  fill(p.fc2_, feature_dim * kH3, kH3, 1.0 / std::sqrt(static_cast<double>(feature_dim)));
  return p;
}

Pixel PixelToFeatureCoord(int u, int v, int width, int height) {
  if (u < 0 || v < 0 || u >= width || v >= height) throw Error(ErrorCode::kOutOfBounds, "pixel outside image");
  return {u / 2, v / 2};
}

FeatureMap EncodeImageRaw(const EncoderParams& p, const ColorImage& image, ImageActivations* cache) {
  const int w = image.width();
  const int h = image.height();
  if (w <= 0 || h <= 0 || w % 2 != 0 || h % 2 != 0) {
    throw Error(ErrorCode::kOddDimensions, "image dimensions must be positive and even");
  }
  const int w2 = w / 2;
  const int h2 = h / 2;
  const std::size_t d = p.feature_dim();
  const double* params = p.values().data();

  ImageActivations local;
  ImageActivations& act = cache != nullptr ? *cache : local;
  act.in_width = w;
  act.in_height = h;
  act.input.resize(image.data().size());
  for (std::size_t i = 0; i < image.data().size(); ++i) act.input[i] = image.data()[i] / 127.5 - 1.0;

  Conv3x3(act.input, w, h, kC0, 2, params + p.conv1().weights, params + p.conv1().biases, kC1, w2, h2, act.hidden1);
  for (double& x : act.hidden1) x = std::tanh(x);
  Conv3x3(act.hidden1, w2, h2, kC1, 1, params + p.conv2().weights, params + p.conv2().biases, kC2, w2, h2,
          act.hidden2);
  for (double& x : act.hidden2) x = std::tanh(x);

  FeatureMap out;
  out.width = w2;
  out.height = h2;
  out.dim = d;
  out.values.resize(static_cast<std::size_t>(w2) * h2 * d);
  for (std::size_t r = 0; r < static_cast<std::size_t>(w2) * h2; ++r) {
    Dense(act.hidden2.data() + r * kC2, kC2, params + p.conv3().weights, params + p.conv3().biases, d,
          out.values.data() + r * d);
  }
  return out;
}

FeatureMap EncodeImage(const EncoderParams& p, const ColorImage& image) {
  FeatureMap f = EncodeImageRaw(p, image);
  if (p.normalize()) {
    NormalizeRows(f.values, f.dim);
    f.normalized = true;
  }
  return f;
}

void BackwardImage(const EncoderParams& p, const ImageActivations& cache, std::span<const double> grad_features,
                   std::span<double> grad) {
  const int w = cache.in_width;
  const int h = cache.in_height;
  const int w2 = w / 2;
  const int h2 = h / 2;
  const std::size_t cells = static_cast<std::size_t>(w2) * h2;
  const std::size_t d = p.feature_dim();
  const double* params = p.values().data();
  if (grad_features.size() != cells * d || grad.size() != p.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient buffer size mismatch");
  }

  // conv1×1
  std::vector<double> dz2(cells * kC2, 0.0);
  const double* w3 = params + p.conv3().weights;
  double* gw3 = grad.data() + p.conv3().weights;
  double* gb3 = grad.data() + p.conv3().biases;
  for (std::size_t r = 0; r < cells; ++r) {
    const double* g = grad_features.data() + r * d;
    const double* a2 = cache.hidden2.data() + r * kC2;
    double* da2 = dz2.data() + r * kC2;
    for (std::size_t o = 0; o < d; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      gb3[o] += go;
      const double* wo = w3 + o * kC2;
      double* gwo = gw3 + o * kC2;
      for (std::size_t i = 0; i < kC2; ++i) {
        gwo[i] += go * a2[i];
        da2[i] += go * wo[i];
      }
    }
    for (std::size_t i = 0; i < kC2; ++i) da2[i] *= 1.0 - a2[i] * a2[i];
  }

  std::vector<double> da1;
  Conv3x3Backward(cache.hidden1, w2, h2, kC1, 1, params + p.conv2().weights, kC2, w2, h2, dz2,
                  grad.data() + p.conv2().weights, grad.data() + p.conv2().biases, &da1);
  for (std::size_t i = 0; i < da1.size(); ++i) da1[i] *= 1.0 - cache.hidden1[i] * cache.hidden1[i];
  Conv3x3Backward(cache.input, w, h, kC0, 2, params + p.conv1().weights, kC1, w2, h2, da1,
                  grad.data() + p.conv1().weights, grad.data() + p.conv1().biases, nullptr);
}

std::array<double, 27> OccupancyNeighborhood(const OccupancyChunk& chunk, const VoxelIndex& v) {
  std::array<double, 27> n{};
  std::size_t k = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) n[k++] = chunk.IsOccupied({v.x + dx, v.y + dy, v.z + dz}) ? 1.0 : 0.0;
  return n;
}

VoxelFeatures EncodeVoxelsRaw(const EncoderParams& p, const OccupancyChunk& chunk, std::span<const VoxelIndex> voxels,
                              VoxelActivations* cache) {
  const std::size_t d = p.feature_dim();
  const std::size_t n = voxels.size();
  const double* params = p.values().data();
  VoxelActivations local;
  VoxelActivations& act = cache != nullptr ? *cache : local;
  act.neighborhoods.assign(n * kN3, 0.0);
  act.hidden.assign(n * kH3, 0.0);

  VoxelFeatures out;
  out.keys.assign(voxels.begin(), voxels.end());
  out.dim = d;
  out.values.assign(n * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto nb = OccupancyNeighborhood(chunk, voxels[r]);
    std::copy(nb.begin(), nb.end(), act.neighborhoods.begin() + static_cast<std::ptrdiff_t>(r * kN3));
    double* hidden = act.hidden.data() + r * kH3;
    Dense(nb.data(), kN3, params + p.fc1().weights, params + p.fc1().biases, kH3, hidden);
    for (std::size_t i = 0; i < kH3; ++i) hidden[i] = std::tanh(hidden[i]);
    Dense(hidden, kH3, params + p.fc2().weights, params + p.fc2().biases, d, out.values.data() + r * d);
  }
  return out;
}

VoxelFeatures EncodeChunk(const EncoderParams& p, const OccupancyChunk& chunk) {
  if (chunk.occupied.empty()) throw Error(ErrorCode::kEmptyChunk, "chunk has no occupied voxels");
  VoxelFeatures f = EncodeVoxelsRaw(p, chunk, chunk.occupied);
  if (p.normalize()) {
    NormalizeRows(f.values, f.dim);
    f.normalized = true;
  }
  return f;
}

void BackwardVoxels(const EncoderParams& p, const VoxelActivations& cache, std::span<const double> grad_features,
                    std::span<double> grad) {
  const std::size_t d = p.feature_dim();
  const std::size_t n = cache.hidden.size() / kH3;
  const double* params = p.values().data();
  if (grad_features.size() != n * d || grad.size() != p.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient buffer size mismatch");
  }
  const double* w2 = params + p.fc2().weights;
  double* gw2 = grad.data() + p.fc2().weights;
  double* gb2 = grad.data() + p.fc2().biases;
  double* gw1 = grad.data() + p.fc1().weights;
  double* gb1 = grad.data() + p.fc1().biases;
  std::vector<double> dh(kH3);
  for (std::size_t r = 0; r < n; ++r) {
    const double* g = grad_features.data() + r * d;
    const double* hidden = cache.hidden.data() + r * kH3;
    const double* nb = cache.neighborhoods.data() + r * kN3;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t o = 0; o < d; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      gb2[o] += go;
      for (std::size_t i = 0; i < kH3; ++i) {
        gw2[o * kH3 + i] += go * hidden[i];
        dh[i] += go * w2[o * kH3 + i];
      }
    }
    for (std::size_t i = 0; i < kH3; ++i) {
      const double dz = dh[i] * (1.0 - hidden[i] * hidden[i]);
      if (dz == 0.0) continue;
      gb1[i] += dz;
      for (std::size_t j = 0; j < kN3; ++j) gw1[i * kN3 + j] += dz * nb[j];
    }
  }
}

void NormalizeRows(std::vector<double>& values, std::size_t dim) {
  for (std::size_t r = 0; r * dim < values.size(); ++r) {
    double* row = values.data() + r * dim;
    double n = 0.0;
    for (std::size_t c = 0; c < dim; ++c) n += row[c] * row[c];
    n = std::sqrt(n);
    if (n == 0.0) throw Error(ErrorCode::kNormalizationOfZeroVector, "cannot normalize a zero feature");
    for (std::size_t c = 0; c < dim; ++c) row[c] /= n;
  }
}

}  // namespace pri3d
