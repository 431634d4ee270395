#pragma once

#include <optional>
#include <vector>

#include "pdmd/datasets.hpp"
#include "pdmd/dmd_core.hpp"
#include "pdmd/embedding.hpp"
#include "pdmd/types.hpp"

namespace pdmd {

/// Everything needed to evaluate x(t) = Re(Σₖ ϕₖ exp(ωₖ(t − t₀)) bₖ).
struct DmdModel {
  CMat physical_modes;
  CMat modes;
  CVec lambda;
  CVec omega;
  CVec b;
  double dt = 1.0;
  Mat basis;
  Index delay = 1;
  Index rank = 0;
  double t0 = 0.0;
  Index training_m = 0;

  Index mode_count() const { return lambda.size(); }
  /// Throws unless all per-mode sizes agree.
  void validate() const;
};

DmdModel make_model(const ReducedTrajectory& traj, const DelaySystem& sys, const DmdSpectrum& spectrum, const CVec& b,
                    double t0 = 0.0);

struct Evaluation {
  SnapshotMatrix snapshots;
  /// ‖Im‖_F / ‖·‖_F of the complex sum before the real part was taken.
  double imag_fraction = 0.0;
  /// Some entry exceeded 1e15 in magnitude and was clamped.
  bool diverged = false;
  /// Discrete powers λʲ were used because a selected eigenvalue is zero.
  bool discrete = false;
};

inline constexpr double kDivergenceClamp = 1e15;

/// Evaluates the model at arbitrary times. Continuous-time by default; when a
/// mode with nonzero amplitude has λ = 0 the times must sit on the sample grid
/// and λʲ is used instead.
Evaluation reconstruct(const DmdModel& model, const std::vector<double>& times);

/// Times t₀ + j·dt for j = 0..m−1.
Evaluation reconstruct_training(const DmdModel& model);

/// Times t₀ + (m + j)·dt for j = 0..horizon−1.
Evaluation forecast(const DmdModel& model, Index horizon_steps);

/// 100·‖truth − approx‖_F / ‖truth‖_F.
double frobenius_error(const Mat& truth, const Mat& approx);

struct DynamicError {
  std::vector<double> err;
  /// Columns whose truth has zero norm; their `err` entry is 0 and meaningless.
  std::vector<bool> undefined;
};

/// Per-column ‖xⱼ − x̂ⱼ‖₂ / ‖xⱼ‖₂.
DynamicError dynamic_error(const Mat& truth, const Mat& approx);

struct ErrorReport {
  double frobenius_recon_pct = 0.0;
  std::optional<double> frobenius_forecast_pct;
  DynamicError dynamic;
  /// First column of the forecast window inside `dynamic`.
  Index split = 0;
  double dt = 1.0;
  double t0 = 0.0;
};

/// Reconstruction and (if nonempty) forecast errors against the matching truth.
ErrorReport make_error_report(const Mat& truth_recon, const Mat& recon, const Mat& truth_forecast,
                              const Mat& forecast_values, double dt, double t0 = 0.0);

}  // namespace pdmd
