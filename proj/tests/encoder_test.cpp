#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pri3d/encoder.hpp"
#include "test_support.hpp"

namespace pri3d {
namespace {

ColorImage RandomImage(int w, int h, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  ColorImage img(w, h);
  for (auto& c : img.data()) c = static_cast<std::uint8_t>(byte(gen));
  return img;
}

OccupancyChunk RandomChunk(std::uint64_t seed, int n = 6, double fill = 0.3) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution on(fill);
  std::vector<WorldPoint> pts;
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        if (on(gen)) pts.emplace_back(0.02 * x + 0.01, 0.02 * y + 0.01, 0.02 * z + 0.01);
      }
    }
  }
  FrustumBox box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(0.02 * n - 1e-9)};
  return CropChunk(pts, box, 0.02);
}

std::vector<double> RandomWeights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> w(n);
  for (double& x : w) x = d(gen);
  return w;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(PixelToFeatureCoord, FloorDivision) {
  EXPECT_EQ(PixelToFeatureCoord(0, 0, 64, 48), (Pixel{0, 0}));
  EXPECT_EQ(PixelToFeatureCoord(5, 3, 64, 48), (Pixel{2, 1}));
  EXPECT_EQ(PixelToFeatureCoord(63, 47, 64, 48), (Pixel{31, 23}));
  testing::ExpectErrorCode(ErrorCode::kOutOfBounds, [] { PixelToFeatureCoord(64, 0, 64, 48); });
}

TEST(EncodeImage, HalfResolutionShape) {
  const EncoderParams p = EncoderParams::Random(32, 1);
  const FeatureMap f = EncodeImage(p, RandomImage(64, 48, 2));
  EXPECT_EQ(f.width, 32);
  EXPECT_EQ(f.height, 24);
  EXPECT_EQ(f.dim, 32u);
  EXPECT_EQ(f.values.size(), 32u * 24u * 32u);
  testing::ExpectErrorCode(ErrorCode::kOddDimensions, [&] { EncodeImage(p, RandomImage(63, 48, 2)); });
}

TEST(EncodeImage, DeterministicAndNormalizedOnRequest) {
  const ColorImage img = RandomImage(16, 12, 3);
  const EncoderParams raw = EncoderParams::Random(8, 4, false);
  EXPECT_EQ(EncodeImage(raw, img).values, EncodeImage(raw, img).values);
  const EncoderParams unit = EncoderParams::Random(8, 4, true);
  const FeatureMap f = EncodeImage(unit, img);
  EXPECT_TRUE(f.normalized);
  for (std::size_t r = 0; r < f.Table().rows; ++r) {
    const auto row = f.Table().Row(r);
    EXPECT_NEAR(std::sqrt(Dot(row, row)), 1.0, 1e-6);
  }
}

TEST(EncodeImage, ZeroWeightsGiveZeroFeatures) {
  EncoderParams p(8, false);
  const FeatureMap f = EncodeImage(p, RandomImage(8, 6, 5));
  for (double v : f.values) EXPECT_EQ(v, 0.0);
  p.set_normalize(true);
  testing::ExpectErrorCode(ErrorCode::kNormalizationOfZeroVector, [&] { EncodeImage(p, RandomImage(8, 6, 5)); });
}

TEST(EncodeImage, ReceptiveFieldIsSevenPixels) {
  // conv3×3/2 then conv3×3/1 then 1×1: output cell x sees inputs 2x−3 .. 2x+3.
  const EncoderParams p = EncoderParams::Random(4, 6);
  const ColorImage base = RandomImage(24, 20, 7);
  const FeatureMap f0 = EncodeImageRaw(p, base);
  for (const auto& [u, v] : std::vector<std::pair<int, int>>{{0, 0}, {11, 9}, {12, 10}, {23, 19}, {5, 14}}) {
    ColorImage img = base;
    img.at(u, v, 1) = static_cast<std::uint8_t>(255 - img.at(u, v, 1));
    const FeatureMap f1 = EncodeImageRaw(p, img);
    for (int fy = 0; fy < f0.height; ++fy) {
      for (int fx = 0; fx < f0.width; ++fx) {
        const bool inside = std::abs(2 * fx - u) <= 3 && std::abs(2 * fy - v) <= 3;
        double change = 0.0;
        for (std::size_t k = 0; k < f0.dim; ++k) {
          change = std::max(change, std::abs(f0.values[f0.RowOf(fx, fy) * f0.dim + k] - f1.values[f1.RowOf(fx, fy) * f1.dim + k]));
        }
        if (inside) {
          EXPECT_GT(change, 0.0) << "pixel " << u << "," << v << " cell " << fx << "," << fy;
        } else {
          EXPECT_EQ(change, 0.0) << "pixel " << u << "," << v << " cell " << fx << "," << fy;
        }
      }
    }
  }
}

TEST(EncodeChunk, IsolatedVoxelSeesOneHotCenter) {
  const std::vector<WorldPoint> pts = {WorldPoint(0.05, 0.05, 0.05)};
  const OccupancyChunk c = CropChunk(pts, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(0.1)}, 0.02);
  const auto nb = OccupancyNeighborhood(c, c.occupied[0]);
  for (std::size_t i = 0; i < 27; ++i) EXPECT_EQ(nb[i], i == 13 ? 1.0 : 0.0);

  const EncoderParams p = EncoderParams::Random(5, 8);
  const VoxelFeatures f = EncodeChunk(p, c);
  ASSERT_EQ(f.keys.size(), 1u);
  const auto w = p.values();
  for (std::size_t k = 0; k < 5; ++k) {
    double out = w[p.fc2().biases + k];
    for (std::size_t j = 0; j < EncoderParams::kHidden3d; ++j) {
      const double hidden = std::tanh(w[p.fc1().weights + j * 27 + 13] + w[p.fc1().biases + j]);
      out += w[p.fc2().weights + k * EncoderParams::kHidden3d + j] * hidden;
    }
    EXPECT_NEAR(f.values[k], out, 1e-12);
  }
}

TEST(EncodeChunk, IdenticalNeighborhoodsIdenticalFeatures) {
  const std::vector<WorldPoint> pts = {WorldPoint(0.01, 0.01, 0.01), WorldPoint(0.11, 0.11, 0.11)};
  const OccupancyChunk c = CropChunk(pts, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(0.2)}, 0.02);
  const VoxelFeatures f = EncodeChunk(EncoderParams::Random(6, 9), c);
  ASSERT_EQ(f.keys.size(), 2u);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(f.values[k], f.values[6 + k]);
  EXPECT_EQ(f.keys, c.occupied);
  testing::ExpectErrorCode(ErrorCode::kEmptyChunk, [] { EncodeChunk(EncoderParams::Random(6, 9), OccupancyChunk{}); });
}

TEST(BackwardImage, MatchesFiniteDifferences) {
  EncoderParams p = EncoderParams::Random(4, 10);
  const ColorImage img = RandomImage(8, 6, 11);
  const std::size_t n_features = 4 * 3 * 4;
  const std::vector<double> probe = RandomWeights(n_features, 12);
  ImageActivations act;
  EncodeImageRaw(p, img, &act);
  std::vector<double> grad(p.size(), 0.0);
  BackwardImage(p, act, probe, grad);
  const double h = 1e-5;
  for (std::size_t i = 0; i < p.first_3d_offset(); ++i) {
    const double keep = p.values()[i];
    p.values()[i] = keep + h;
    const double up = Dot(EncodeImageRaw(p, img).values, probe);
    p.values()[i] = keep - h;
    const double down = Dot(EncodeImageRaw(p, img).values, probe);
    p.values()[i] = keep;
    ASSERT_LT(testing::RelError(grad[i], (up - down) / (2 * h)), 1e-5) << "param " << i;
  }
  for (std::size_t i = p.first_3d_offset(); i < p.size(); ++i) EXPECT_EQ(grad[i], 0.0);
}

TEST(BackwardVoxels, MatchesFiniteDifferences) {
  EncoderParams p = EncoderParams::Random(4, 13);
  const OccupancyChunk c = RandomChunk(14);
  ASSERT_GT(c.occupied.size(), 10u);
  const std::vector<double> probe = RandomWeights(c.occupied.size() * 4, 15);
  VoxelActivations act;
  EncodeVoxelsRaw(p, c, c.occupied, &act);
  std::vector<double> grad(p.size(), 0.0);
  BackwardVoxels(p, act, probe, grad);
  const double h = 1e-5;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p.values()[i];
    p.values()[i] = keep + h;
    const double up = Dot(EncodeVoxelsRaw(p, c, c.occupied).values, probe);
    p.values()[i] = keep - h;
    const double down = Dot(EncodeVoxelsRaw(p, c, c.occupied).values, probe);
    p.values()[i] = keep;
    ASSERT_LT(testing::RelError(grad[i], (up - down) / (2 * h)), 1e-5) << "param " << i;
  }
}

TEST(NormalizeRows, UnitRowsAndZeroError) {
  std::vector<double> v = {3, 4, 0, 0, 0, 2};
  NormalizeRows(v, 3);
  EXPECT_NEAR(v[0], 0.6, 1e-15);
  EXPECT_NEAR(v[1], 0.8, 1e-15);
  EXPECT_NEAR(v[5], 1.0, 1e-15);
  std::vector<double> z = {1, 0, 0, 0};
  testing::ExpectErrorCode(ErrorCode::kNormalizationOfZeroVector, [&] { NormalizeRows(z, 2); });
}

}  // namespace
}  // namespace pri3d
