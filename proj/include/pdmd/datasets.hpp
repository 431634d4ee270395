#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "pdmd/types.hpp"

namespace pdmd {

/// Real n×m snapshot matrix sampled with a uniform time step.
/// Columns are snapshots, rows are measurement locations.
struct SnapshotMatrix {
  Mat values;
  double dt = 1.0;
  /// Optional row coordinates (spatial grid); empty when unknown.
  std::vector<double> grid;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  /// Throws `Error` unless n ≥ 1, m ≥ 2, dt > 0 and every entry is finite.
  void validate() const;
};

enum class SignalKind { ThreeSine, HiddenDynamics };

struct ThreeSineParams {
  std::array<double, 3> amplitudes{5.0, 9.0, 11.0};
  std::array<double, 3> frequencies_hz{7.0, 9.0, 13.0};
};

/// Two travelling waves, one growing and one decaying:
/// z(x,t) = sin(k1 x − ω1 t) e^{γ1 t} + sin(k2 x − ω2 t) e^{γ2 t}.
struct HiddenDynamicsParams {
  double k1 = 1.0;
  double k2 = 0.4;
  double omega1 = 1.0;
  double omega2 = 3.7;
  double gamma1 = 1.0;
  double gamma2 = -0.2;
  std::vector<double> grid;
};

struct SignalSpec {
  SignalKind kind = SignalKind::ThreeSine;
  ThreeSineParams three_sine;
  HiddenDynamicsParams hidden;
  double sample_rate = 1000.0;
  double duration = 2.0;

  /// Number of snapshots, round(duration · sample_rate).
  Index snapshot_count() const;
};

/// 300 evenly spaced points on [0, 4π].
std::vector<double> default_hidden_grid();

/// Hidden-dynamics spec observing [0, 2π) with `snapshots` samples on the default grid.
SignalSpec default_hidden_spec(Index snapshots = 64);

SnapshotMatrix gen_three_sine(const SignalSpec& spec);
SnapshotMatrix gen_hidden_dynamics(const SignalSpec& spec);
/// Dispatches on `spec.kind`.
SnapshotMatrix generate(const SignalSpec& spec);

enum class NoiseKind { Gaussian, Speckle, SaltPepper };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double variance = 0.0;
  double density = 0.0;
  std::uint64_t seed = 0;
};

/// Portable random stream: std::mt19937_64 (its output sequence is fixed by the
/// standard) with hand-written uniform, integer and Box–Muller normal transforms
/// so draws are identical on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box–Muller; draws come in pairs.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Noise draws are consumed in row-major order of the matrix.
SnapshotMatrix add_noise(const SnapshotMatrix& data, const NoiseSpec& spec);

enum class MatrixFormat { Csv, Binary };

void save_matrix(const SnapshotMatrix& data, const std::filesystem::path& path, MatrixFormat format);
SnapshotMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);

/// Infers the format from the extension (".csv" → Csv, anything else → Binary).
MatrixFormat format_from_path(const std::filesystem::path& path);

}  // namespace pdmd
