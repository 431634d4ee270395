#include "pdmd/recon_forecast.hpp"

#include <cmath>

#include "pdmd/error.hpp"

namespace pdmd {

namespace {

// λⁿ by repeated squaring, so 0⁰ = 1 and 0ⁿ = 0 exactly.
cdouble integer_power(cdouble base, long long n) {
  cdouble result{1.0, 0.0};
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

}  // namespace

void DmdModel::validate() const {
  const Index K = lambda.size();
  if (omega.size() != K || b.size() != K || modes.cols() != K)
    throw Error(ErrorCode::DimensionMismatch, "model has inconsistent mode counts");
  if (rank < 1 || modes.rows() < rank || basis.cols() != rank)
    throw Error(ErrorCode::DimensionMismatch, "model basis does not match its modes");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "model time step must be positive");
}

DmdModel make_model(const ReducedTrajectory& traj, const DelaySystem& sys, const DmdSpectrum& spectrum, const CVec& b,
                    double t0) {
  DmdModel m;
  m.physical_modes = spectrum.physical_modes;
  m.modes = spectrum.modes;
  m.lambda = spectrum.eigenvalues;
  m.omega = spectrum.omega.size() ? spectrum.omega : continuous_exponents(spectrum.eigenvalues, sys.dt);
  m.b = b;
  m.dt = sys.dt;
  m.basis = traj.basis;
  m.delay = sys.delay;
  m.rank = sys.rank;
  m.t0 = t0;
  m.training_m = traj.snapshots();
  m.validate();
  return m;
}

Evaluation reconstruct(const DmdModel& model, const std::vector<double>& times) {
  model.validate();
  std::vector<Index> active;
  bool discrete = false;
  for (Index k = 0; k < model.mode_count(); ++k) {
    if (model.b[k] == cdouble{0.0, 0.0}) continue;
    active.push_back(k);
    discrete = discrete || std::abs(model.lambda[k]) <= kZeroEigenvalueTol;
  }

  const Index T = static_cast<Index>(times.size());
  CMat reduced = CMat::Zero(model.rank, T);
  Evaluation out;
  out.discrete = discrete;
  for (Index c = 0; c < T; ++c) {
    const double tau = times[c] - model.t0;
    if (!std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "evaluation times must be finite");
    double steps = 0.0;
    if (discrete) {
      steps = std::round(tau / model.dt);
      if (steps < 0.0 || std::abs(steps - tau / model.dt) > 1e-6)
        throw Error(ErrorCode::InvalidArgument, "zero eigenvalues require times on the forward sample grid");
    }
    for (Index k : active) {
      const cdouble growth = discrete ? integer_power(model.lambda[k], static_cast<long long>(steps)) : std::exp(model.omega[k] * tau);
      const cdouble coef = growth * model.b[k];
      if (!std::isfinite(coef.real()) || !std::isfinite(coef.imag())) {
        out.diverged = true;
        continue;
      }
      reduced.col(c) += model.modes.col(k).head(model.rank) * coef;
    }
  }

  const double total = reduced.norm();
  out.imag_fraction = total > 0.0 ? reduced.imag().norm() / total : 0.0;
  Mat values = model.basis * reduced.real();
  for (Index i = 0; i < values.size(); ++i) {
    double& v = values.data()[i];
    if (!std::isfinite(v) || std::abs(v) > kDivergenceClamp) {
      out.diverged = true;
      v = std::isnan(v) ? kDivergenceClamp : std::copysign(kDivergenceClamp, v);
    }
  }
  out.snapshots.values = std::move(values);
  out.snapshots.dt = model.dt;
  return out;
}

Evaluation reconstruct_training(const DmdModel& model) {
  std::vector<double> times(model.training_m);
  for (Index j = 0; j < model.training_m; ++j) times[j] = model.t0 + static_cast<double>(j) * model.dt;
  return reconstruct(model, times);
}

Evaluation forecast(const DmdModel& model, Index horizon_steps) {
  if (horizon_steps < 1) throw Error(ErrorCode::InvalidArgument, "forecast horizon must be at least 1");
  std::vector<double> times(horizon_steps);
  for (Index j = 0; j < horizon_steps; ++j)
    times[j] = model.t0 + static_cast<double>(model.training_m + j) * model.dt;
  return reconstruct(model, times);
}

double frobenius_error(const Mat& truth, const Mat& approx) {
  if (truth.rows() != approx.rows() || truth.cols() != approx.cols())
    throw Error(ErrorCode::DimensionMismatch, "truth and approximation shapes differ");
  const double denom = truth.norm();
  if (denom == 0.0) throw Error(ErrorCode::InvalidArgument, "truth has zero norm");
  return 100.0 * (truth - approx).norm() / denom;
}

DynamicError dynamic_error(const Mat& truth, const Mat& approx) {
  if (truth.rows() != approx.rows() || truth.cols() != approx.cols())
    throw Error(ErrorCode::DimensionMismatch, "truth and approximation shapes differ");
  DynamicError out;
  out.err.resize(truth.cols());
  out.undefined.resize(truth.cols());
  for (Index j = 0; j < truth.cols(); ++j) {
    const double denom = truth.col(j).norm();
    out.undefined[j] = denom == 0.0;
    out.err[j] = denom == 0.0 ? 0.0 : (truth.col(j) - approx.col(j)).norm() / denom;
  }
  return out;
}

ErrorReport make_error_report(const Mat& truth_recon, const Mat& recon, const Mat& truth_forecast,
                              const Mat& forecast_values, double dt, double t0) {
  ErrorReport rep;
  rep.dt = dt;
  rep.t0 = t0;
  rep.frobenius_recon_pct = frobenius_error(truth_recon, recon);
  rep.dynamic = dynamic_error(truth_recon, recon);
  rep.split = truth_recon.cols();
  if (truth_forecast.cols() > 0) {
    rep.frobenius_forecast_pct = frobenius_error(truth_forecast, forecast_values);
    const DynamicError tail = dynamic_error(truth_forecast, forecast_values);
    rep.dynamic.err.insert(rep.dynamic.err.end(), tail.err.begin(), tail.err.end());
    rep.dynamic.undefined.insert(rep.dynamic.undefined.end(), tail.undefined.begin(), tail.undefined.end());
  }
  return rep;
}

}  // namespace pdmd
