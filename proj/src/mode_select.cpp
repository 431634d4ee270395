#include "pdmd/mode_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "pdmd/error.hpp"

namespace pdmd {

CVec amplitudes_from_first_snapshot(const CMat& Phi, const CVec& x1) {
  if (Phi.rows() != x1.size()) throw Error(ErrorCode::DimensionMismatch, "snapshot length does not match the modes");
  Eigen::CompleteOrthogonalDecomposition<CMat> cod(Phi);
  return cod.solve(x1);
}

CMat build_vandermonde(const CVec& lambda, Index M) {
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "Vandermonde matrix needs at least one column");
  CMat V(lambda.size(), M);
  for (Index k = 0; k < lambda.size(); ++k) {
    cdouble power{1.0, 0.0};
    for (Index j = 0; j < M; ++j) {
      V(k, j) = power;
      power *= lambda[k];
    }
    if (!V.row(k).allFinite()) throw Error(ErrorCode::NonFiniteData, "eigenvalue power overflows the Vandermonde matrix");
  }
  return V;
}

AmplitudeProblem build_amplitude_problem(const CMat& Phi, const CVec& lambda, const Mat& X_fit) {
  if (Phi.cols() != lambda.size()) throw Error(ErrorCode::DimensionMismatch, "mode and eigenvalue counts differ");
  if (Phi.rows() != X_fit.rows()) throw Error(ErrorCode::DimensionMismatch, "modes and fit data have different row counts");
  AmplitudeProblem pr;
  pr.K = lambda.size();
  pr.M = X_fit.cols();
  pr.lambda = lambda;
  pr.V = build_vandermonde(lambda, pr.M);

  const CMat gram = Phi.adjoint() * Phi;
  const CMat vv = pr.V * pr.V.adjoint();
  pr.P = gram.cwiseProduct(vv.conjugate());
  pr.P = (0.5 * (pr.P + pr.P.adjoint())).eval();

  const CMat G = X_fit.transpose().cast<cdouble>() * Phi;  // M×K
  pr.q = pr.V.cwiseProduct(G.transpose()).rowwise().sum().conjugate();
  pr.s = X_fit.squaredNorm();
  return pr;
}

double cost(const AmplitudeProblem& problem, const CVec& b) {
  if (b.size() != problem.K) throw Error(ErrorCode::DimensionMismatch, "amplitude vector has the wrong length");
  const double quad = b.dot(problem.P * b).real();
  const double lin = problem.q.dot(b).real();
  return std::max(0.0, quad - 2.0 * lin + problem.s);
}

double frobenius_cost(const CMat& Phi, const CMat& V, const Mat& X_fit, const CVec& b) {
  const CMat model = Phi * b.asDiagonal() * V;
  return (X_fit.cast<cdouble>() - model).squaredNorm();
}

std::string to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::LeastSquares: return "least_squares";
    case SelectionMethod::Omp: return "omp";
    case SelectionMethod::SpDmd: return "spdmd";
  }
  return "unknown";
}

namespace {

// Cholesky solve with the ridge fallback for numerically singular systems.
CVec hermitian_solve(const CMat& A, const CVec& rhs, bool& regularized) {
  regularized = false;
  Eigen::LLT<CMat> llt(A);
  if (llt.info() == Eigen::Success && llt.rcond() >= 1e-13) return llt.solve(rhs);
  const Index K = A.rows();
  const double ridge = 1e-12 * std::max(A.trace().real(), std::numeric_limits<double>::min()) / static_cast<double>(K);
  CMat shifted = A;
  shifted.diagonal().array() += ridge;
  llt.compute(shifted);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "amplitude system is singular beyond the ridge");
  regularized = true;
  return llt.solve(rhs);
}

CVec scatter(const std::vector<Index>& support, const CVec& values, Index K) {
  CVec b = CVec::Zero(K);
  for (std::size_t i = 0; i < support.size(); ++i) b[support[i]] = values[static_cast<Index>(i)];
  return b;
}

bool is_real(cdouble l) { return std::abs(l.imag()) <= 1e-8 * std::max(1.0, std::abs(l)); }

}  // namespace

SparseAmplitudes least_squares_amplitudes(const AmplitudeProblem& problem) {
  if (problem.K < 1) throw Error(ErrorCode::InvalidArgument, "amplitude problem has no modes");
  SparseAmplitudes out;
  out.method = SelectionMethod::LeastSquares;
  out.b = hermitian_solve(problem.P, problem.q, out.regularized);
  out.support.resize(problem.K);
  for (Index k = 0; k < problem.K; ++k) out.support[k] = k;
  return out;
}

OmpResult omp_select(const AmplitudeProblem& problem, const OmpOptions& options) {
  const Index K = problem.K;
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "amplitude problem has no modes");

  std::vector<bool> taken(K, false);
  std::vector<Index> support;
  std::vector<std::vector<Index>> supports;
  std::vector<CVec> fits;
  CVec res = problem.q;
  OmpResult out;
  auto& trace = out.trace;
  const double log_k1 = std::log(static_cast<double>(K) + 1.0);

  while (static_cast<Index>(support.size()) < K) {
    const CVec corr = problem.P.adjoint() * res;
    Index pick = -1;
    double best = -1.0;
    for (Index j = 0; j < K; ++j)
      if (!taken[j] && std::abs(corr[j]) > best) best = std::abs(corr[j]), pick = j;

    OmpRecord rec;
    rec.iteration = static_cast<Index>(trace.records.size()) + 1;
    rec.index = pick;
    taken[pick] = true;
    support.push_back(pick);

    const cdouble lp = problem.lambda[pick];
    if (options.pair_lock && !is_real(lp)) {
      const double tol = options.pair_tol * std::max(1.0, std::abs(lp));
      Index partner = -1;
      double nearest = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < K; ++j) {
        if (taken[j]) continue;
        const double dist = std::abs(problem.lambda[j] - std::conj(lp));
        if (dist < nearest) nearest = dist, partner = j;
      }
      if (partner >= 0 && nearest < tol) {
        taken[partner] = true;
        support.push_back(partner);
        rec.partner = partner;
      }
    }

    CMat B(K, static_cast<Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c) B.col(static_cast<Index>(c)) = problem.P.col(support[c]);
    const CVec coef = B.colPivHouseholderQr().solve(problem.q);
    res = problem.q - B * coef;

    rec.selected = static_cast<Index>(support.size());
    rec.resnorm = res.norm();
    const double first = trace.records.empty() ? rec.resnorm : trace.records.front().resnorm;
    rec.res_scaled = first > 0.0 ? rec.resnorm / first : 0.0;
    rec.zeta = std::log(static_cast<double>(rec.selected) + 1.0) / log_k1;
    rec.delta = std::abs(rec.res_scaled - rec.zeta);
    trace.records.push_back(rec);
    supports.push_back(support);
    fits.push_back(coef);

    if (trace.records.size() == 1 && rec.resnorm <= 1e-14 * std::max(problem.q.norm(), std::numeric_limits<double>::min())) {
      trace.reason = "exact";
      break;
    }
    const std::size_t n = trace.records.size();
    if (n > 1 && trace.records[n - 1].delta > trace.records[n - 2].delta) {
      trace.reason = "delta";
      break;
    }
  }
  if (trace.reason.empty()) trace.reason = "exhausted";

  const Index stop = static_cast<Index>(trace.records.size());
  Index argmin = 1;
  for (Index i = 1; i <= stop; ++i)
    if (trace.records[i - 1].delta < trace.records[argmin - 1].delta) argmin = i;
  trace.stop_iteration = stop;
  trace.argmin_iteration = argmin;
  trace.argmin_support = supports[argmin - 1];
  trace.argmin_b = scatter(supports[argmin - 1], fits[argmin - 1], K);

  out.amplitudes.method = SelectionMethod::Omp;
  out.amplitudes.support = supports[stop - 1];
  out.amplitudes.b = scatter(supports[stop - 1], fits[stop - 1], K);
  return out;
}

double gamma_max(const AmplitudeProblem& problem) { return 2.0 * problem.q.cwiseAbs().maxCoeff(); }

std::vector<double> gamma_grid(const AmplitudeProblem& problem, Index count, double ratio) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "gamma grid needs at least one point");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma grid ratio must lie in (0, 1]");
  const double top = gamma_max(problem);
  if (!(top > 0.0)) throw Error(ErrorCode::InvalidArgument, "amplitude problem has q = 0");
  std::vector<double> grid(count);
  const double lo = std::log10(top * ratio), hi = std::log10(top);
  for (Index i = 0; i < count; ++i)
    grid[i] = count == 1 ? top : std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return grid;
}

double performance_loss(const AmplitudeProblem& problem, const CVec& b_sparse, double j_least_squares) {
  const double js = cost(problem, b_sparse);
  if (j_least_squares <= 0.0) return js <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * std::sqrt(js / j_least_squares);
}

double performance_loss(const AmplitudeProblem& problem, const CVec& b_sparse) {
  return performance_loss(problem, b_sparse, cost(problem, least_squares_amplitudes(problem).b));
}

std::vector<SpDmdResult> spdmd_admm(const AmplitudeProblem& problem, const std::vector<double>& gammas,
                                    const AdmmOptions& options) {
  if (gammas.empty()) throw Error(ErrorCode::InvalidArgument, "gamma list is empty");
  for (double g : gammas)
    if (!(g > 0.0 && std::isfinite(g))) throw Error(ErrorCode::InvalidArgument, "gamma values must be positive");
  if (!(options.rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "ADMM penalty rho must be positive");
  const Index K = problem.K;
  const double rho = options.rho;

  CMat shifted = problem.P;
  shifted.diagonal().array() += rho / 2.0;
  Eigen::LLT<CMat> llt(shifted);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "P + (rho/2)I is not positive definite");

  const double j_ls = cost(problem, least_squares_amplitudes(problem).b);
  const double sqrt_k = std::sqrt(static_cast<double>(K));

  std::vector<SpDmdResult> results;
  results.reserve(gammas.size());
  for (double gamma : gammas) {
    const double kappa = gamma / rho;
    CVec z = CVec::Zero(K), y = CVec::Zero(K), x(K);
    SpDmdResult r;
    r.gamma = gamma;
    for (Index it = 1; it <= options.max_iter; ++it) {
      x = llt.solve(problem.q + (rho / 2.0) * (z - y / rho));
      const CVec v = x + y / rho;
      CVec z_new(K);
      for (Index k = 0; k < K; ++k) {
        const double mag = std::abs(v[k]);
        z_new[k] = mag > kappa ? v[k] * ((mag - kappa) / mag) : cdouble{0.0, 0.0};
      }
      y += rho * (x - z_new);
      const double primal = (x - z_new).norm();
      const double dual = rho * (z_new - z).norm();
      const double eps_primal = sqrt_k * options.eps_abs + options.eps_rel * std::max(x.norm(), z_new.norm());
      const double eps_dual = sqrt_k * options.eps_abs + options.eps_rel * y.norm();
      z = z_new;
      r.iterations = it;
      if (primal < eps_primal && dual < eps_dual) {
        r.converged = true;
        break;
      }
    }

    SparseAmplitudes& a = r.amplitudes;
    a.method = SelectionMethod::SpDmd;
    a.gamma = gamma;
    for (Index k = 0; k < K; ++k)
      if (z[k] != cdouble{0.0, 0.0}) a.support.push_back(k);
    a.b = CVec::Zero(K);
    if (!a.support.empty()) {
      const Index n = static_cast<Index>(a.support.size());
      CMat Pss(n, n);
      CVec qs(n);
      for (Index i = 0; i < n; ++i) {
        qs[i] = problem.q[a.support[i]];
        for (Index j = 0; j < n; ++j) Pss(i, j) = problem.P(a.support[i], a.support[j]);
      }
      a.b = scatter(a.support, hermitian_solve(Pss, qs, a.regularized), K);
    }
    r.performance_loss = performance_loss(problem, a.b, j_ls);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace pdmd
