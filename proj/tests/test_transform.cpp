#include "test_support.hpp"

#include <gtest/gtest.h>

namespace nv = noisevec;

namespace {

nv::NoiseVector random_vector(std::mt19937_64& gen, std::size_t d) {
  return {nv::Vector(nvtest::random_rows(gen, d, 1)), nv::Vector(nvtest::random_rows(gen, d, 1)), 1, 1};
}

nv::AffineMap random_map(std::mt19937_64& gen, std::size_t d_out, std::size_t d) {
  return {nv::Matrix(nvtest::random_rows(gen, d_out, 3 * d)), nv::Vector(nvtest::random_rows(gen, d_out, 1))};
}

TEST(ControlLayer, IdentityAppendConcatenates) {
  std::mt19937_64 gen(1);
  auto x = nvtest::random_features(gen, 7, 3);
  auto v = random_vector(gen, 3);
  auto y = nv::apply_control_layer(x, v, nv::AffineMap::identity_append(3));
  ASSERT_EQ(y.num_frames(), 7u);
  ASSERT_EQ(y.dim(), 9u);
  for (std::size_t t = 0; t < 7; ++t) {
    nv::Vector expect(9);
    expect << x.frame(t), v.speech_mean, v.silence_mean;
    EXPECT_EQ(y.frame(t), expect);
  }
}

TEST(ControlLayer, ProjectionRecoversFeatures) {
  std::mt19937_64 gen(2);
  auto x = nvtest::random_features(gen, 11, 4);
  nv::AffineMap map{nv::Matrix::Zero(4, 12), nv::Vector::Zero(4)};
  map.weights.leftCols(4).setIdentity();
  EXPECT_EQ(nv::apply_control_layer(x, random_vector(gen, 4), map), x);
}

TEST(ControlLayer, MatchesTripleLoopOracle) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t d = 1 + static_cast<std::size_t>(rep % 5), d_out = 1 + static_cast<std::size_t>(rep % 7);
    auto x = nvtest::random_features(gen, 13, d);
    auto v = random_vector(gen, d);
    auto map = random_map(gen, d_out, d);
    auto y = nv::apply_control_layer(x, v, map);
    for (std::size_t t = 0; t < 13; ++t) {
      std::vector<double> in;
      for (std::size_t j = 0; j < d; ++j) in.push_back(x(t, j));
      for (std::size_t j = 0; j < d; ++j) in.push_back(v.speech_mean(static_cast<Eigen::Index>(j)));
      for (std::size_t j = 0; j < d; ++j) in.push_back(v.silence_mean(static_cast<Eigen::Index>(j)));
      for (std::size_t i = 0; i < d_out; ++i) {
        double acc = map.bias(static_cast<Eigen::Index>(i));
        for (std::size_t k = 0; k < 3 * d; ++k) acc += map.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * in[k];
        EXPECT_NEAR(y(t, i), acc, 1e-12 * std::max(1.0, std::abs(acc)));
      }
    }
  }
}

TEST(ControlLayer, LinearInFeatureBlock) {
  std::mt19937_64 gen(4);
  auto x = nvtest::random_features(gen, 9, 3);
  auto map = random_map(gen, 5, 3);
  map.bias.setZero();
  auto zero = nv::NoiseVector::zeros(3);
  const double alpha = 0.75;
  auto y = nv::apply_control_layer(x, zero, map);
  auto ya = nv::apply_control_layer(nv::FeatureMatrix(nv::RowMatrix(alpha * x.matrix())), zero, map);
  EXPECT_LT((ya.matrix() - alpha * y.matrix()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ControlLayer, PreservesFrameCountIncludingEmpty) {
  std::mt19937_64 gen(5);
  auto v = random_vector(gen, 2);
  EXPECT_EQ(nv::apply_control_layer(nv::FeatureMatrix(nv::RowMatrix(0, 2)), v, nv::AffineMap::identity_append(2)).num_frames(), 0u);
}

TEST(ControlLayer, DimensionErrors) {
  std::mt19937_64 gen(6);
  auto x = nvtest::random_features(gen, 3, 2);
  EXPECT_THROW(nv::apply_control_layer(x, random_vector(gen, 3), nv::AffineMap::identity_append(2)), nv::DataError);
  EXPECT_THROW(nv::apply_control_layer(x, random_vector(gen, 2), nv::AffineMap::identity_append(3)), nv::DataError);
  nv::AffineMap bad{nv::Matrix::Zero(2, 6), nv::Vector::Zero(3)};
  EXPECT_THROW(nv::apply_control_layer(x, random_vector(gen, 2), bad), nv::DataError);
}

TEST(AffineFile, RoundTripAndErrors) {
  std::mt19937_64 gen(7);
  nvtest::TempDir dir("affine");
  for (int rep = 0; rep < 50; ++rep) {
    auto map = random_map(gen, 1 + static_cast<std::size_t>(rep % 6), 1 + static_cast<std::size_t>(rep % 4));
    nv::write_affine(map, dir / "a.txt");
    auto back = nv::read_affine(dir / "a.txt");
    EXPECT_EQ(back.weights, map.weights);
    EXPECT_EQ(back.bias, map.bias);
  }
  EXPECT_EQ(nv::encode_affine({nv::Matrix::Constant(1, 3, 0.5), nv::Vector::Constant(1, -1.0)}),
            "NVAFFINE1\n[meta] rows=1 cols=3\n[weights]\n0.5\t0.5\t0.5\n[bias]\n-1\n");
  EXPECT_THROW(nv::decode_affine("NVPRIOR1\n"), nv::DataError);
  EXPECT_THROW(nv::decode_affine("NVAFFINE1\n[meta] rows=1 cols=2\n[weights]\n1\t1\n[bias]\n0\n"), nv::DataError);
}

}  // namespace
