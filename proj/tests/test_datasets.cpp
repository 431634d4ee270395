#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "pdmd/datasets.hpp"
#include "pdmd/error.hpp"

using namespace pdmd;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pdmd_test_" + name);
}

void expect_code(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "no exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(ThreeSine, ValuesAtKnownTimes) {
  SignalSpec spec;
  const SnapshotMatrix x = gen_three_sine(spec);
  ASSERT_EQ(x.rows(), 1);
  ASSERT_EQ(x.cols(), 2000);
  EXPECT_DOUBLE_EQ(x.dt, 1e-3);
  EXPECT_NEAR(x.values(0, 0), 0.0, 1e-12);
  // 5 sin(3.5π) + 9 sin(4.5π) + 11 sin(6.5π) = −5 + 9 + 11
  EXPECT_NEAR(x.values(0, 250), 15.0, 1e-9);
}

TEST(ThreeSine, IsSumOfSingleSines) {
  SignalSpec spec;
  spec.duration = 0.5;
  const Mat all = gen_three_sine(spec).values;
  Mat sum = Mat::Zero(1, all.cols());
  for (int k = 0; k < 3; ++k) {
    SignalSpec one = spec;
    one.three_sine.amplitudes = {0.0, 0.0, 0.0};
    one.three_sine.amplitudes[k] = spec.three_sine.amplitudes[k];
    sum += gen_three_sine(one).values;
  }
  EXPECT_LT((all - sum).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ThreeSine, RejectsUndersampling) {
  SignalSpec spec;
  spec.sample_rate = 26.0;
  expect_code(ErrorCode::InvalidArgument, [&] { gen_three_sine(spec); });
}

TEST(HiddenDynamics, InitialSnapshot) {
  SignalSpec spec = default_hidden_spec(64);
  spec.hidden.grid = {0.0, 1.3, std::numbers::pi / 2};
  const SnapshotMatrix z = gen_hidden_dynamics(spec);
  ASSERT_EQ(z.rows(), 3);
  ASSERT_EQ(z.cols(), 64);
  EXPECT_NEAR(z.values(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(z.values(2, 0), 1.0 + std::sin(0.2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(z.values(2, 0), 1.5878, 1e-4);
  EXPECT_NEAR(z.values(1, 0), std::sin(1.3) + std::sin(0.4 * 1.3), 1e-12);
  EXPECT_NEAR(z.dt, 2.0 * std::numbers::pi / 64.0, 1e-15);
}

TEST(HiddenDynamics, DefaultGrid) {
  const auto grid = default_hidden_grid();
  ASSERT_EQ(grid.size(), 300u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.0);
  EXPECT_NEAR(grid.back(), 4.0 * std::numbers::pi, 1e-12);
}

TEST(HiddenDynamics, RejectsUnsortedGrid) {
  SignalSpec spec = default_hidden_spec(16);
  spec.hidden.grid = {0.0, 2.0, 1.0};
  expect_code(ErrorCode::InvalidArgument, [&] { gen_hidden_dynamics(spec); });
}

TEST(Noise, ZeroVarianceIsIdentity) {
  SignalSpec spec;
  spec.duration = 0.1;
  const SnapshotMatrix x = gen_three_sine(spec);
  const SnapshotMatrix y = add_noise(x, NoiseSpec{NoiseKind::Gaussian, 0.0, 0.0, 3});
  EXPECT_EQ(x.values, y.values);
}

TEST(Noise, GaussianSampleVariance) {
  SnapshotMatrix zeros;
  zeros.values = Mat::Zero(1, 1000000);
  const Mat y = add_noise(zeros, NoiseSpec{NoiseKind::Gaussian, 9.0, 0.0, 17}).values;
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
  EXPECT_NEAR(var, 9.0, 0.09);
}

TEST(Noise, SaltPepperCounts) {
  SnapshotMatrix x;
  x.values.resize(100, 100);
  for (Index i = 0; i < x.values.size(); ++i) x.values.data()[i] = 1.0 + 0.001 * static_cast<double>(i);
  const double top = x.values.maxCoeff();
  x.values(0, 0) = top + 1.0;  // unique maximum away from the bulk
  const double salt = x.values.maxCoeff();
  const Mat y = add_noise(x, NoiseSpec{NoiseKind::SaltPepper, 0.0, 0.02, 5}).values;
  Index zeros = 0, salted = 0, changed = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y.data()[i] == 0.0) ++zeros;
    if (y.data()[i] == salt && i != 0) ++salted;
    if (y.data()[i] != x.values.data()[i]) ++changed;
    EXPECT_TRUE(y.data()[i] == x.values.data()[i] || y.data()[i] == 0.0 || y.data()[i] == salt);
  }
  EXPECT_EQ(zeros, 100);
  // The original maximum can be salted without changing; account for it.
  EXPECT_TRUE(salted == 100 || salted == 99);
  EXPECT_EQ(changed + (salted == 99 ? 1 : 0), 200);
}

TEST(Noise, SaltPepperOddCountSplitsPepperDown) {
  SnapshotMatrix x;
  x.values = Mat::Constant(1, 7, 3.0);
  x.values(0, 6) = 5.0;
  const Mat y = add_noise(x, NoiseSpec{NoiseKind::SaltPepper, 0.0, 3.0 / 7.0, 1}).values;
  EXPECT_EQ((y.array() == 0.0).count(), 1);
}

TEST(Noise, SpeckleOnZerosIsZero) {
  SnapshotMatrix zeros;
  zeros.values = Mat::Zero(8, 9);
  EXPECT_TRUE((add_noise(zeros, NoiseSpec{NoiseKind::Speckle, 25.0, 0.0, 2}).values.array() == 0.0).all());
}

TEST(Noise, SameSeedSameOutputDifferentSeedDifferent) {
  SnapshotMatrix x;
  x.values = Mat::Ones(5, 6);
  const NoiseSpec a{NoiseKind::Gaussian, 1.0, 0.0, 99};
  NoiseSpec b = a;
  b.seed = 100;
  EXPECT_EQ(add_noise(x, a).values, add_noise(x, a).values);
  EXPECT_NE(add_noise(x, a).values, add_noise(x, b).values);
}

TEST(Noise, StreamIsReproducible) {
  RandomStream rng(0);
  const double a = rng.normal(), b = rng.normal();
  RandomStream again(0);
  EXPECT_EQ(a, again.normal());
  EXPECT_EQ(b, again.normal());
  RandomStream u(0);
  EXPECT_EQ(u.uniform(), static_cast<double>(std::mt19937_64(0)() >> 11) * 0x1.0p-53);
}

TEST(Noise, RejectsBadParameters) {
  SnapshotMatrix x;
  x.values = Mat::Ones(2, 2);
  expect_code(ErrorCode::InvalidArgument, [&] { add_noise(x, NoiseSpec{NoiseKind::Gaussian, -1.0, 0.0, 0}); });
  expect_code(ErrorCode::InvalidArgument, [&] { add_noise(x, NoiseSpec{NoiseKind::SaltPepper, 0.0, 1.5, 0}); });
}

TEST(MatrixIo, BinaryRoundTrip) {
  SnapshotMatrix x;
  x.values.resize(3, 4);
  x.values << 1, -2.5, 3e-300, 4, 5, 6, 7, 8, 9, 10, 11, 1.0 / 3.0;
  x.dt = 0.125;
  const auto path = temp_file("rt.bin");
  save_matrix(x, path, MatrixFormat::Binary);
  const SnapshotMatrix y = load_matrix(path, MatrixFormat::Binary);
  EXPECT_EQ(x.values, y.values);
  EXPECT_EQ(x.dt, y.dt);
  std::filesystem::remove(path);
}

TEST(MatrixIo, CsvRoundTripIsExact) {
  SnapshotMatrix x;
  x.values.resize(2, 3);
  x.values << 0.1, 1.0 / 7.0, -1e-17, 123456789.123, 2.0, -0.0;
  x.dt = 0.1;
  const auto path = temp_file("rt.csv");
  save_matrix(x, path, MatrixFormat::Csv);
  const SnapshotMatrix y = load_matrix(path, MatrixFormat::Csv);
  EXPECT_EQ(x.values, y.values);
  EXPECT_EQ(y.dt, 0.1);
  std::filesystem::remove(path);
}

TEST(MatrixIo, CsvHeaderDefinesShape) {
  const auto path = temp_file("hdr.csv");
  std::ofstream(path) << "# n=2,m=3,dt=0.1\n1,2,3\n4,5,6\n";
  const SnapshotMatrix y = load_matrix(path, MatrixFormat::Csv);
  EXPECT_EQ(y.rows(), 2);
  EXPECT_EQ(y.cols(), 3);
  EXPECT_DOUBLE_EQ(y.dt, 0.1);
  EXPECT_EQ(y.values(1, 2), 6.0);
  std::filesystem::remove(path);
}

TEST(MatrixIo, CsvRejectsNan) {
  const auto path = temp_file("nan.csv");
  std::ofstream(path) << "# n=1,m=3,dt=1\n1,nan,3\n";
  expect_code(ErrorCode::NonFiniteData, [&] { load_matrix(path, MatrixFormat::Csv); });
  std::filesystem::remove(path);
}

TEST(MatrixIo, BinaryRejectsNan) {
  SnapshotMatrix x;
  x.values = Mat::Ones(2, 2);
  const auto path = temp_file("nan.bin");
  save_matrix(x, path, MatrixFormat::Binary);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4 + 4 + 8 + 8 + 8);
    const double nan = std::nan("");
    f.write(reinterpret_cast<const char*>(&nan), sizeof nan);
  }
  expect_code(ErrorCode::NonFiniteData, [&] { load_matrix(path, MatrixFormat::Binary); });
  std::filesystem::remove(path);
}

TEST(MatrixIo, MalformedInputs) {
  const auto path = temp_file("bad.csv");
  std::ofstream(path) << "# n=2,m=3,dt=0.1\n1,2,3\n";
  expect_code(ErrorCode::DimensionMismatch, [&] { load_matrix(path, MatrixFormat::Csv); });
  std::ofstream(path) << "n=2,m=3\n";
  expect_code(ErrorCode::MalformedFile, [&] { load_matrix(path, MatrixFormat::Csv); });
  std::ofstream(path) << "XXXXjunk";
  expect_code(ErrorCode::MalformedFile, [&] { load_matrix(path, MatrixFormat::Binary); });
  std::filesystem::remove(path);
  expect_code(ErrorCode::IoError, [&] { load_matrix(temp_file("does_not_exist.csv"), MatrixFormat::Csv); });
}

TEST(MatrixIo, FormatFromExtension) {
  EXPECT_EQ(format_from_path("a/b.csv"), MatrixFormat::Csv);
  EXPECT_EQ(format_from_path("a/b.bin"), MatrixFormat::Binary);
}

TEST(SnapshotMatrixValidate, Invariants) {
  SnapshotMatrix x;
  x.values = Mat::Ones(1, 1);
  expect_code(ErrorCode::DimensionMismatch, [&] { x.validate(); });
  x.values = Mat::Ones(1, 2);
  x.dt = 0.0;
  expect_code(ErrorCode::InvalidArgument, [&] { x.validate(); });
}
