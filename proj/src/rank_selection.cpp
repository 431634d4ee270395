#include "pdmd/rank_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pdmd/error.hpp"

namespace pdmd {

SvdFactors compute_svd(const Mat& data) {
  if (data.rows() < 1 || data.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "SVD of an empty matrix");
  if (!data.allFinite()) throw Error(ErrorCode::NonFiniteData, "SVD input contains non-finite entries");
  Eigen::BDCSVD<Mat> svd(data, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "SVD did not converge");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

RankCriterion RankCriterion::hard_threshold(std::optional<double> noise_level) {
  RankCriterion c;
  c.kind = RankKind::OptimalHardThreshold;
  c.noise_level = noise_level;
  return c;
}

RankCriterion RankCriterion::energy_fraction(double eps) {
  RankCriterion c;
  c.kind = RankKind::EnergyFraction;
  c.energy = eps;
  return c;
}

RankCriterion RankCriterion::fixed(Index r) {
  RankCriterion c;
  c.kind = RankKind::Fixed;
  c.fixed_rank = r;
  return c;
}

void RankCriterion::validate() const {
  switch (kind) {
    case RankKind::OptimalHardThreshold:
      if (noise_level && !(*noise_level > 0.0 && std::isfinite(*noise_level)))
        throw Error(ErrorCode::InvalidArgument, "noise level for the hard threshold must be positive");
      break;
    case RankKind::EnergyFraction:
      if (!(energy > 0.0 && energy <= 1.0)) throw Error(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1]");
      break;
    case RankKind::Fixed:
      if (fixed_rank < 1) throw Error(ErrorCode::InvalidArgument, "fixed rank must be at least 1");
      break;
  }
}

std::string RankCriterion::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case RankKind::OptimalHardThreshold:
      os << "oht";
      if (noise_level) os << ':' << *noise_level;
      break;
    case RankKind::EnergyFraction: os << "energy:" << energy; break;
    case RankKind::Fixed: os << "fixed:" << fixed_rank; break;
  }
  return os.str();
}

RankCriterion RankCriterion::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) throw Error(ErrorCode::ConfigError, "bad rank criterion '" + text + "'");
    return v;
  };
  RankCriterion c;
  if (head == "oht") {
    c = hard_threshold(tail.empty() ? std::nullopt : std::optional<double>(number(tail)));
  } else if (head == "energy") {
    c = energy_fraction(number(tail));
  } else if (head == "fixed") {
    const double r = number(tail);
    if (r != std::floor(r)) throw Error(ErrorCode::ConfigError, "fixed rank must be an integer");
    c = fixed(static_cast<Index>(r));
  } else {
    throw Error(ErrorCode::ConfigError, "unknown rank criterion '" + text + "'");
  }
  c.validate();
  return c;
}

double hard_threshold_coefficient(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "aspect ratio must lie in (0, 1]");
  const double bp1 = beta + 1.0;
  return std::sqrt(2.0 * bp1 + 8.0 * beta / (bp1 + std::sqrt(beta * beta + 14.0 * beta + 1.0)));
}

double marcenko_pastur_median(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "aspect ratio must lie in (0, 1]");
  const double lower = (1.0 - std::sqrt(beta)) * (1.0 - std::sqrt(beta));
  const double upper = (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta));
  auto density = [&](double x) {
    if (x <= 0.0) return 0.0;
    const double w = std::max(0.0, (upper - x) * (x - lower));
    return std::sqrt(w) / (2.0 * std::numbers::pi * beta * x);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto cdf = [&](double x) { return integrator.integrate(density, lower, x, 1e-10); };

  double lo = lower;
  double hi = upper;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * upper; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  if (hi - lo > 1e-8) throw Error(ErrorCode::NonConvergence, "Marcenko-Pastur median bisection did not converge");
  return 0.5 * (lo + hi);
}

double unknown_noise_coefficient(double beta) {
  return hard_threshold_coefficient(beta) / std::sqrt(marcenko_pastur_median(beta));
}

double optimal_threshold_known_noise(double beta, double n, double noise_level) {
  if (!(noise_level > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level must be positive");
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  return hard_threshold_coefficient(beta) * std::sqrt(n) * noise_level;
}

double optimal_threshold_unknown_noise(double beta, const Vec& singular_values) {
  if (singular_values.size() == 0) throw Error(ErrorCode::InvalidArgument, "no singular values given");
  std::vector<double> sv(singular_values.data(), singular_values.data() + singular_values.size());
  std::sort(sv.begin(), sv.end());
  const std::size_t k = sv.size();
  const double median = k % 2 ? sv[k / 2] : 0.5 * (sv[k / 2 - 1] + sv[k / 2]);
  return unknown_noise_coefficient(beta) * median;
}

Index energy_rank(const Vec& singular_values, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1]");
  const Index k = singular_values.size();
  if (k == 0) return 0;
  const double total = singular_values.squaredNorm();
  if (total == 0.0) return 0;
  if (eps == 1.0) return (singular_values.array() > 0.0).count();
  double acc = 0.0;
  for (Index r = 0; r < k; ++r) {
    acc += singular_values[r] * singular_values[r];
    if (acc / total >= eps) return r + 1;
  }
  return k;
}

namespace {

TruncatedSvd decide(const Mat& U, const Vec& S, const Mat& V, const Vec& full, Index n, Index m,
                    const RankCriterion& criterion) {
  criterion.validate();
  const Index k = std::min(n, m);
  RankDecision decision;
  decision.criterion = criterion;
  decision.transposed = n > m;
  decision.beta = static_cast<double>(k) / static_cast<double>(std::max(n, m));

  if (full.size() == 0 || full[0] <= 0.0) throw Error(ErrorCode::InvalidArgument, "data matrix is identically zero");

  Index r = 0;
  switch (criterion.kind) {
    case RankKind::OptimalHardThreshold: {
      double tau = criterion.noise_level
                             ? optimal_threshold_known_noise(decision.beta, static_cast<double>(std::max(n, m)),
                                                             *criterion.noise_level)
                             : optimal_threshold_unknown_noise(decision.beta, full);
      // Values below the round-off level of σ₁ are never signal. Without this
      // floor exactly low-rank data (median σ = 0) gives τ = 0.
      const double floor = full[0] * static_cast<double>(std::max(n, m)) * std::numeric_limits<double>::epsilon();
      if (tau < floor) {
        tau = floor;
        decision.warnings.push_back("hard threshold raised to the round-off floor of the largest singular value");
      }
      decision.threshold = tau;
      r = (full.array() > tau).count();
      break;
    }
    case RankKind::EnergyFraction: r = energy_rank(full, criterion.energy); break;
    case RankKind::Fixed:
      if (criterion.fixed_rank > k)
        throw Error(ErrorCode::InvalidArgument, "fixed rank exceeds min(n, m)");
      r = criterion.fixed_rank;
      break;
  }

  const Index positive = (full.array() > 0.0).count();
  if (r > positive) {
    decision.warnings.push_back("requested rank exceeds the number of nonzero singular values; reduced");
    r = positive;
  }
  if (r < 1) {
    r = 1;
    decision.floored = true;
    decision.warnings.push_back("criterion retained no singular values; rank floored at 1");
  }
  r = std::min<Index>(r, S.size());
  decision.rank = r;

  TruncatedSvd out;
  out.U = U.leftCols(r);
  out.S = S.head(r);
  out.V = V.leftCols(r);
  out.rank = r;
  out.full_singular_values = full;
  out.decision = std::move(decision);
  return out;
}

}  // namespace

TruncatedSvd truncate(const SvdFactors& svd, const RankCriterion& criterion) {
  return decide(svd.U, svd.S, svd.V, svd.S, svd.U.rows(), svd.V.rows(), criterion);
}

TruncatedSvd truncate(const TruncatedSvd& tsvd, const RankCriterion& criterion) {
  return decide(tsvd.U, tsvd.S, tsvd.V, tsvd.full_singular_values, tsvd.U.rows(), tsvd.V.rows(), criterion);
}

}  // namespace pdmd
