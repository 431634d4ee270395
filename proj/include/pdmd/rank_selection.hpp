#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdmd/types.hpp"

namespace pdmd {

/// Thin SVD X = U·diag(S)·Vᵀ with S descending.
struct SvdFactors {
  Mat U;
  Vec S;
  Mat V;
};

SvdFactors compute_svd(const Mat& data);

enum class RankKind { OptimalHardThreshold, EnergyFraction, Fixed };

struct RankCriterion {
  RankKind kind = RankKind::OptimalHardThreshold;
  /// Known noise magnitude for the hard threshold; unset means estimate it.
  std::optional<double> noise_level;
  double energy = 0.99;
  Index fixed_rank = 1;

  static RankCriterion hard_threshold(std::optional<double> noise_level = std::nullopt);
  static RankCriterion energy_fraction(double eps);
  static RankCriterion fixed(Index r);

  /// Throws unless ε ∈ (0, 1], r ≥ 1 and η > 0.
  void validate() const;
  /// "oht", "oht:<η>", "energy:<ε>" or "fixed:<r>".
  std::string to_string() const;
  static RankCriterion parse(const std::string& text);
};

/// What `truncate` decided and why.
struct RankDecision {
  RankCriterion criterion;
  std::optional<double> threshold;
  double beta = 1.0;
  bool transposed = false;
  Index rank = 0;
  bool floored = false;
  std::vector<std::string> warnings;
};

struct TruncatedSvd {
  Mat U;
  Vec S;
  Mat V;
  Index rank = 0;
  Vec full_singular_values;
  RankDecision decision;
};

/// Gavish–Donoho coefficient λ(β) = sqrt(2(β+1) + 8β / ((β+1) + sqrt(β²+14β+1))).
double hard_threshold_coefficient(double beta);

/// Median of the Marcenko–Pastur law with aspect ratio β (variance 1), found by
/// bisection on the CDF; the CDF is integrated numerically.
double marcenko_pastur_median(double beta);

/// ω(β) = λ(β) / sqrt(MP median).
double unknown_noise_coefficient(double beta);

/// τ = λ(β)·√n·η.
double optimal_threshold_known_noise(double beta, double n, double noise_level);

/// τ = ω(β)·median(σ).
double optimal_threshold_unknown_noise(double beta, const Vec& singular_values);

/// Smallest r with Σ_{i≤r} σᵢ² / Σ σⱼ² ≥ ε.
Index energy_rank(const Vec& singular_values, double eps);

/// Applies `criterion` to a full thin SVD of an n×m matrix. The retained rank is
/// floored at 1 (with a warning).
TruncatedSvd truncate(const SvdFactors& svd, const RankCriterion& criterion);

/// Re-applies a criterion to an already truncated factorization, using its full
/// singular-value list for the decision. Never grows the rank.
TruncatedSvd truncate(const TruncatedSvd& tsvd, const RankCriterion& criterion);

}  // namespace pdmd
