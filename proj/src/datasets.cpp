#include "pdmd/datasets.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "pdmd/error.hpp"

namespace pdmd {

void SnapshotMatrix::validate() const {
  if (values.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "snapshot matrix needs at least one row");
  if (values.cols() < 2) throw Error(ErrorCode::DimensionMismatch, "snapshot matrix needs at least two snapshots");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "time step dt must be positive");
  if (!values.allFinite()) throw Error(ErrorCode::NonFiniteData, "snapshot matrix contains non-finite entries");
  if (!grid.empty() && static_cast<Index>(grid.size()) != values.rows())
    throw Error(ErrorCode::DimensionMismatch, "grid length does not match row count");
}

Index SignalSpec::snapshot_count() const { return static_cast<Index>(std::llround(duration * sample_rate)); }

std::vector<double> default_hidden_grid() {
  constexpr int n = 300;
  std::vector<double> grid(n);
  const double length = 4.0 * std::numbers::pi;
  for (int i = 0; i < n; ++i) grid[i] = length * i / (n - 1);
  return grid;
}

SignalSpec default_hidden_spec(Index snapshots) {
  SignalSpec spec;
  spec.kind = SignalKind::HiddenDynamics;
  spec.hidden.grid = default_hidden_grid();
  spec.duration = 2.0 * std::numbers::pi;
  spec.sample_rate = static_cast<double>(snapshots) / spec.duration;
  return spec;
}

namespace {

void check_timing(const SignalSpec& spec) {
  if (!(spec.duration > 0.0) || !std::isfinite(spec.duration))
    throw Error(ErrorCode::InvalidArgument, "signal duration must be positive");
  if (!(spec.sample_rate > 0.0) || !std::isfinite(spec.sample_rate))
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (spec.snapshot_count() < 2) throw Error(ErrorCode::InvalidArgument, "signal must contain at least two samples");
}

}  // namespace

SnapshotMatrix gen_three_sine(const SignalSpec& spec) {
  if (spec.kind != SignalKind::ThreeSine) throw Error(ErrorCode::InvalidArgument, "spec is not a three-sine signal");
  check_timing(spec);
  const auto& p = spec.three_sine;
  const double f_max = *std::max_element(p.frequencies_hz.begin(), p.frequencies_hz.end());
  if (spec.sample_rate <= 2.0 * f_max)
    throw Error(ErrorCode::InvalidArgument, "sample rate violates the Nyquist limit of the signal content");

  const Index m = spec.snapshot_count();
  SnapshotMatrix out;
  out.values.resize(1, m);
  out.dt = 1.0 / spec.sample_rate;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Index k = 0; k < m; ++k) {
    const double t = static_cast<double>(k) / spec.sample_rate;
    double v = 0.0;
    for (std::size_t c = 0; c < 3; ++c) v += p.amplitudes[c] * std::sin(p.frequencies_hz[c] * two_pi * t);
    out.values(0, k) = v;
  }
  return out;
}

SnapshotMatrix gen_hidden_dynamics(const SignalSpec& spec) {
  if (spec.kind != SignalKind::HiddenDynamics)
    throw Error(ErrorCode::InvalidArgument, "spec is not a hidden-dynamics signal");
  check_timing(spec);
  const auto& p = spec.hidden;
  if (p.grid.empty()) throw Error(ErrorCode::InvalidArgument, "hidden-dynamics spatial grid is empty");
  for (std::size_t i = 1; i < p.grid.size(); ++i)
    if (!(p.grid[i] > p.grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "spatial grid must be strictly increasing");

  const Index n = static_cast<Index>(p.grid.size());
  const Index m = spec.snapshot_count();
  SnapshotMatrix out;
  out.values.resize(n, m);
  out.dt = 1.0 / spec.sample_rate;
  out.grid = p.grid;
  for (Index k = 0; k < m; ++k) {
    const double t = static_cast<double>(k) / spec.sample_rate;
    const double grow = std::exp(p.gamma1 * t);
    const double decay = std::exp(p.gamma2 * t);
    for (Index i = 0; i < n; ++i) {
      const double x = p.grid[i];
      out.values(i, k) = std::sin(p.k1 * x - p.omega1 * t) * grow + std::sin(p.k2 * x - p.omega2 * t) * decay;
    }
  }
  return out;
}

SnapshotMatrix generate(const SignalSpec& spec) {
  switch (spec.kind) {
    case SignalKind::ThreeSine: return gen_three_sine(spec);
    case SignalKind::HiddenDynamics: return gen_hidden_dynamics(spec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown signal kind");
}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t RandomStream::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "empty sampling range");
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

SnapshotMatrix add_noise(const SnapshotMatrix& data, const NoiseSpec& spec) {
  if (!data.values.allFinite()) throw Error(ErrorCode::NonFiniteData, "cannot add noise to non-finite data");
  SnapshotMatrix out = data;
  RandomStream rng(spec.seed);
  const Index n = data.rows();
  const Index m = data.cols();

  switch (spec.kind) {
    case NoiseKind::Gaussian:
    case NoiseKind::Speckle: {
      if (!(spec.variance >= 0.0) || !std::isfinite(spec.variance))
        throw Error(ErrorCode::InvalidArgument, "noise variance must be non-negative");
      const double sigma = std::sqrt(spec.variance);
      if (sigma == 0.0) return out;
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) {
          const double draw = sigma * rng.normal();
          out.values(i, j) += spec.kind == NoiseKind::Gaussian ? draw : draw * data.values(i, j);
        }
      return out;
    }
    case NoiseKind::SaltPepper: {
      if (!(spec.density >= 0.0 && spec.density <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "salt-and-pepper density must lie in [0, 1]");
      const std::uint64_t numel = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(m);
      const auto corrupted = static_cast<std::uint64_t>(std::floor(spec.density * static_cast<double>(numel)));
      const std::uint64_t pepper = corrupted / 2;
      const double salt_value = data.values.maxCoeff();
      // Partial Fisher–Yates over row-major linear indices.
      std::vector<std::uint64_t> order(numel);
      std::iota(order.begin(), order.end(), std::uint64_t{0});
      for (std::uint64_t k = 0; k < corrupted; ++k) {
        const std::uint64_t pick = k + rng.below(numel - k);
        std::swap(order[k], order[pick]);
        const auto row = static_cast<Index>(order[k] / static_cast<std::uint64_t>(m));
        const auto col = static_cast<Index>(order[k] % static_cast<std::uint64_t>(m));
        out.values(row, col) = k < pepper ? 0.0 : salt_value;
      }
      return out;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown noise kind");
}

MatrixFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::Binary;
}

namespace {

constexpr char kMagic[4] = {'P', 'D', 'M', 'D'};
constexpr std::uint32_t kBinaryVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw Error(ErrorCode::MalformedFile, "unexpected end of binary matrix file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::MalformedFile, "cannot parse number '" + std::string(s) + "'");
  return v;
}

void parse_csv_header(const std::string& line, Index& n, Index& m, double& dt) {
  if (line.empty() || line[0] != '#') throw Error(ErrorCode::MalformedFile, "CSV header must start with '#'");
  bool have_n = false, have_m = false, have_dt = false;
  std::stringstream ss(line.substr(1));
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::MalformedFile, "bad CSV header field '" + field + "'");
    std::string key = field.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), [](unsigned char c) { return std::isspace(c); }), key.end());
    const double value = parse_double(std::string_view(field).substr(eq + 1));
    if (key == "n") {
      n = static_cast<Index>(value);
      have_n = static_cast<double>(n) == value;
    } else if (key == "m") {
      m = static_cast<Index>(value);
      have_m = static_cast<double>(m) == value;
    } else if (key == "dt") {
      dt = value;
      have_dt = true;
    } else {
      throw Error(ErrorCode::MalformedFile, "unknown CSV header key '" + key + "'");
    }
  }
  if (!have_n || !have_m || !have_dt) throw Error(ErrorCode::MalformedFile, "CSV header needs integer n, m and dt");
}

}  // namespace

void save_matrix(const SnapshotMatrix& data, const std::filesystem::path& path, MatrixFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  const Index n = data.rows();
  const Index m = data.cols();
  if (format == MatrixFormat::Csv) {
    os << "# n=" << n << ",m=" << m << ",dt=" << format_double(data.dt) << '\n';
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m; ++j) {
        if (j) os << ',';
        os << format_double(data.values(i, j));
      }
      os << '\n';
    }
  } else {
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, kBinaryVersion);
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(n));
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(m));
    write_le<double>(os, data.dt);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) write_le<double>(os, data.values(i, j));
  }
  if (!os) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

SnapshotMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  SnapshotMatrix out;
  Index n = 0, m = 0;
  if (format == MatrixFormat::Csv) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::MalformedFile, "empty CSV file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    parse_csv_header(line, n, m, out.dt);
    if (n < 0 || m < 0) throw Error(ErrorCode::MalformedFile, "negative dimensions in CSV header");
    out.values.resize(n, m);
    Index row = 0;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (row >= n) throw Error(ErrorCode::DimensionMismatch, "CSV has more rows than its header states");
      Index col = 0;
      std::string_view rest(line);
      while (true) {
        const auto comma = rest.find(',');
        const auto token = rest.substr(0, comma);
        if (col >= m) throw Error(ErrorCode::DimensionMismatch, "CSV row has more columns than its header states");
        out.values(row, col++) = parse_double(token);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (col != m) throw Error(ErrorCode::DimensionMismatch, "CSV row has fewer columns than its header states");
      ++row;
    }
    if (row != n) throw Error(ErrorCode::DimensionMismatch, "CSV has fewer rows than its header states");
  } else {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
      throw Error(ErrorCode::MalformedFile, "missing PDMD magic bytes");
    if (read_le<std::uint32_t>(is) != kBinaryVersion) throw Error(ErrorCode::MalformedFile, "unsupported binary version");
    const auto nn = read_le<std::uint64_t>(is);
    const auto mm = read_le<std::uint64_t>(is);
    out.dt = read_le<double>(is);
    constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 34;
    if (nn > kMaxEntries || mm > kMaxEntries || (nn && mm > kMaxEntries / nn))
      throw Error(ErrorCode::MalformedFile, "binary header dimensions are implausible");
    n = static_cast<Index>(nn);
    m = static_cast<Index>(mm);
    out.values.resize(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) out.values(i, j) = read_le<double>(is);
    if (is.peek() != std::char_traits<char>::eof())
      throw Error(ErrorCode::DimensionMismatch, "binary file has trailing data beyond its header dimensions");
  }
  if (!out.values.allFinite()) throw Error(ErrorCode::NonFiniteData, "matrix file contains non-finite entries");
  return out;
}

}  // namespace pdmd
