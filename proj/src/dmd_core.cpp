#include "pdmd/dmd_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pdmd/error.hpp"

namespace pdmd {

std::string to_string(OperatorMethod method) {
  switch (method) {
    case OperatorMethod::Direct: return "direct";
    case OperatorMethod::Projected: return "projected";
    case OperatorMethod::Tls: return "tls";
  }
  return "unknown";
}

namespace {

Index numerical_rank(const Vec& singular_values, double rel_tol) {
  if (singular_values.size() == 0 || singular_values[0] <= 0.0) return 0;
  return (singular_values.array() > rel_tol * singular_values[0]).count();
}

double principal_phase(cdouble z) {
  const double phase = std::arg(z);
  return phase == -std::numbers::pi ? std::numbers::pi : phase;
}

}  // namespace

ReducedOperator reduced_operator(const DelaySystem& sys, const OperatorOptions& options) {
  if (sys.pairs() < 2) throw Error(ErrorCode::DimensionMismatch, "need at least two snapshot pairs for the operator");
  const Mat X1 = sys.x1();
  const Mat X2 = sys.x2();
  if (!X1.allFinite() || !X2.allFinite()) throw Error(ErrorCode::NonFiniteData, "delay system has non-finite entries");

  Eigen::BDCSVD<Mat> svd(X1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "SVD of X1 did not converge");
  const Vec& S = svd.singularValues();
  const Index achievable = numerical_rank(S, options.rel_tol);
  if (achievable == 0) throw Error(ErrorCode::SingularSystem, "X1 is numerically zero");

  ReducedOperator op;
  op.numerical_rank = achievable;
  const bool direct = !options.force_projected && sys.state_dim() <= options.direct_limit;

  if (direct) {
    op.method = OperatorMethod::Direct;
    op.inner_U = svd.matrixU().leftCols(achievable);
    op.inner_S = S.head(achievable);
    op.inner_V = svd.matrixV().leftCols(achievable);
    op.A = X2 * op.inner_V * op.inner_S.cwiseInverse().asDiagonal() * op.inner_U.transpose();
    if (achievable < sys.state_dim())
      op.warnings.push_back("X1 is rank deficient (rank " + std::to_string(achievable) + " of " +
                            std::to_string(sys.state_dim()) + "); operator is zero on the complement");
    return op;
  }

  op.method = OperatorMethod::Projected;
  const TruncatedSvd inner = truncate(SvdFactors{svd.matrixU(), S, svd.matrixV()}, options.inner);
  Index k = inner.rank;
  if (k > achievable) {
    if (options.inner.kind == RankKind::Fixed)
      throw Error(ErrorCode::SingularSystem, "X1 is numerically rank deficient: requested inner rank " +
                                                 std::to_string(k) + ", achievable " + std::to_string(achievable));
    op.warnings.push_back("inner rank reduced to the numerical rank " + std::to_string(achievable));
    k = achievable;
  }
  op.inner_U = inner.U.leftCols(k);
  op.inner_S = inner.S.head(k);
  op.inner_V = inner.V.leftCols(k);
  op.A = op.inner_U.transpose() * X2 * op.inner_V * op.inner_S.cwiseInverse().asDiagonal();
  return op;
}

DmdSpectrum eig_direct(const ReducedOperator& op) {
  if (op.A.rows() != op.A.cols() || op.A.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "operator must be a nonempty square matrix");
  if (!op.A.allFinite()) throw Error(ErrorCode::NonFiniteData, "operator has non-finite entries");

  Eigen::EigenSolver<Mat> solver(op.A, true);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "eigensolver did not converge");
  const CVec lambda = solver.eigenvalues();
  const CMat W = solver.eigenvectors();

  const Index K = lambda.size();
  std::vector<Index> order(K);
  std::iota(order.begin(), order.end(), Index{0});
  // Quantized modulus so conjugate pairs and rounding-level ties fall back to phase.
  auto modulus_key = [&](Index i) { return std::round(std::abs(lambda[i]) * 1e12) / 1e12; };
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double ka = modulus_key(a), kb = modulus_key(b);
    if (ka != kb) return ka > kb;
    return principal_phase(lambda[a]) < principal_phase(lambda[b]);
  });

  DmdSpectrum out;
  out.eigenvalues.resize(K);
  out.eigenvectors.resize(K, K);
  for (Index k = 0; k < K; ++k) {
    out.eigenvalues[k] = lambda[order[k]];
    CVec w = W.col(order[k]);
    const double nrm = w.norm();
    if (nrm > 0.0) w /= nrm;
    out.eigenvectors.col(k) = w;
  }
  out.zero_eigenvalue.resize(K);
  for (Index k = 0; k < K; ++k) out.zero_eigenvalue[k] = std::abs(out.eigenvalues[k]) <= kZeroEigenvalueTol;

  const CMat AW = op.A.cast<cdouble>() * out.eigenvectors;
  const double a_norm = std::max(op.A.norm(), std::numeric_limits<double>::min());
  double worst = 0.0;
  for (Index k = 0; k < K; ++k)
    worst = std::max(worst, (AW.col(k) - out.eigenvalues[k] * out.eigenvectors.col(k)).norm() / a_norm);
  out.eigen_residual = worst;

  Eigen::BDCSVD<CMat> wsvd(out.eigenvectors);
  const Vec& ws = wsvd.singularValues();
  out.eigenvector_condition = ws[ws.size() - 1] > 0.0 ? ws[0] / ws[ws.size() - 1] : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.eigenvector_condition < 1e8);
  return out;
}

CMat exact_modes(const DelaySystem& sys, const ReducedOperator& op, const DmdSpectrum& spectrum) {
  if (op.method != OperatorMethod::Projected) return spectrum.eigenvectors;
  if (op.inner_S.size() != spectrum.eigenvectors.rows())
    throw Error(ErrorCode::DimensionMismatch, "spectrum does not match the projected operator");
  if ((op.inner_S.array() <= 0.0).any()) throw Error(ErrorCode::SingularSystem, "inner singular values must be positive");

  const Mat lift = sys.x2() * op.inner_V * op.inner_S.cwiseInverse().asDiagonal();
  CMat modes = lift.cast<cdouble>() * spectrum.eigenvectors;
  for (Index k = 0; k < modes.cols(); ++k)
    if (spectrum.zero_eigenvalue[k]) modes.col(k) = op.inner_U.cast<cdouble>() * spectrum.eigenvectors.col(k);
  return modes;
}

TlsResult tls_operator(const DelaySystem& sys) {
  if (sys.pairs() < 2) throw Error(ErrorCode::DimensionMismatch, "need at least two snapshot pairs for the operator");
  const Index p = sys.state_dim();
  Mat Z(2 * p, sys.pairs());
  Z.topRows(p) = sys.x1();
  Z.bottomRows(p) = sys.x2();
  if (!Z.allFinite()) throw Error(ErrorCode::NonFiniteData, "delay system has non-finite entries");

  Eigen::BDCSVD<Mat> svd(Z, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "SVD of the stacked matrix did not converge");
  const Index rank_z = energy_rank(svd.singularValues(), 1.0 - 1e-10);
  const Index keep = std::min(rank_z, p);

  const Mat U11 = svd.matrixU().topLeftCorner(p, keep);
  const Mat U21 = svd.matrixU().bottomLeftCorner(p, keep);
  Eigen::BDCSVD<Mat> u11_svd(U11, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s11 = u11_svd.singularValues();

  TlsResult out;
  if (s11.size() == 0 || s11[s11.size() - 1] <= 1e-10 * s11[0]) {
    OperatorOptions fallback;
    out.op = reduced_operator(sys, fallback);
    out.op.warnings.push_back("TLS block U11 is singular; fell back to the least-squares operator");
  } else {
    out.op.method = OperatorMethod::Tls;
    out.op.numerical_rank = keep;
    const Mat U11_pinv = u11_svd.matrixV() * s11.cwiseInverse().asDiagonal() * u11_svd.matrixU().transpose();
    out.op.A = U21 * U11_pinv;
    out.op.inner_U = U11;
  }
  out.spectrum = eig_direct(out.op);
  out.spectrum.modes = exact_modes(sys, out.op, out.spectrum);
  return out;
}

CVec continuous_exponents(const CVec& eigenvalues, double dt) {
  CVec omega(eigenvalues.size());
  for (Index k = 0; k < eigenvalues.size(); ++k) {
    const cdouble l = eigenvalues[k];
    omega[k] = std::abs(l) <= kZeroEigenvalueTol ? cdouble{0.0, 0.0}
                                                  : cdouble{std::log(std::abs(l)), principal_phase(l)} / dt;
  }
  return omega;
}

void to_physical(DmdSpectrum& spectrum, const ReducedTrajectory& traj, const DelaySystem& sys) {
  if (spectrum.modes.rows() != sys.state_dim())
    throw Error(ErrorCode::DimensionMismatch, "modes do not live in the delay system's coordinates");
  spectrum.physical_modes = traj.basis.cast<cdouble>() * spectrum.modes.topRows(sys.rank);
  spectrum.omega = continuous_exponents(spectrum.eigenvalues, sys.dt);
}

OperatorMethod route_method(MethodChoice choice, Index delay) {
  switch (choice) {
    case MethodChoice::Direct: return OperatorMethod::Direct;
    case MethodChoice::Tls: return OperatorMethod::Tls;
    case MethodChoice::Auto: break;
  }
  return delay == 1 ? OperatorMethod::Tls : OperatorMethod::Direct;
}

Decomposition decompose(const ReducedTrajectory& traj, const DelaySystem& sys, MethodChoice choice,
                        const OperatorOptions& options) {
  Decomposition out;
  if (route_method(choice, sys.delay) == OperatorMethod::Tls) {
    TlsResult tls = tls_operator(sys);
    out.op = std::move(tls.op);
    out.spectrum = std::move(tls.spectrum);
  } else {
    out.op = reduced_operator(sys, options);
    out.spectrum = eig_direct(out.op);
    out.spectrum.modes = exact_modes(sys, out.op, out.spectrum);
  }
  to_physical(out.spectrum, traj, sys);
  return out;
}

}  // namespace pdmd
