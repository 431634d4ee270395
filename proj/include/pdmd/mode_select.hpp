#pragma once

#include <string>
#include <vector>

#include "pdmd/types.hpp"

namespace pdmd {

/// b = Φ⁺x₁ (minimum-norm when Φ is rank deficient).
CVec amplitudes_from_first_snapshot(const CMat& Phi, const CVec& x1);

/// V[k, j] = λₖʲ for j = 0..M−1, built by repeated multiplication.
/// Throws NonFiniteData if a power overflows.
CMat build_vandermonde(const CVec& lambda, Index M);

/// Quadratic form of the amplitude cost
/// J(b) = ‖X − Φ·diag(b)·V‖_F² = bᴴPb − 2 Re(qᴴb) + s.
struct AmplitudeProblem {
  CMat P;
  CVec q;
  double s = 0.0;
  CMat V;
  CVec lambda;
  Index K = 0;
  Index M = 0;
};

/// P = (ΦᴴΦ)∘conj(VVᴴ) (symmetrized), q = conj(diag(V·Xᴴ·Φ)), s = ‖X‖_F².
AmplitudeProblem build_amplitude_problem(const CMat& Phi, const CVec& lambda, const Mat& X_fit);

/// Cost via the quadratic form, clamped at 0.
double cost(const AmplitudeProblem& problem, const CVec& b);

/// Cost by direct evaluation of the Frobenius residual.
double frobenius_cost(const CMat& Phi, const CMat& V, const Mat& X_fit, const CVec& b);

enum class SelectionMethod { LeastSquares, Omp, SpDmd };

std::string to_string(SelectionMethod method);

struct SparseAmplitudes {
  /// Off-support entries are exactly zero.
  CVec b;
  std::vector<Index> support;
  SelectionMethod method = SelectionMethod::LeastSquares;
  double gamma = 0.0;
  /// True when P had to be ridge-regularized.
  bool regularized = false;

  Index nnz() const { return static_cast<Index>(support.size()); }
};

/// b = P⁻¹q via Cholesky; falls back to P + 1e-12·tr(P)/K·I when P is
/// numerically singular.
SparseAmplitudes least_squares_amplitudes(const AmplitudeProblem& problem);

struct OmpRecord {
  /// 1-based iteration number.
  Index iteration = 0;
  /// Column picked by the correlation test.
  Index index = 0;
  /// Conjugate partner co-selected under pair-lock, or -1.
  Index partner = -1;
  /// Support size after this iteration.
  Index selected = 0;
  double resnorm = 0.0;
  double res_scaled = 0.0;
  double zeta = 0.0;
  double delta = 0.0;
};

struct SelectionTrace {
  std::vector<OmpRecord> records;
  /// Iteration whose support is returned (1-based).
  Index stop_iteration = 0;
  /// Iteration with the smallest δ among those computed.
  Index argmin_iteration = 0;
  /// Why the loop ended: "delta", "exhausted" or "exact".
  std::string reason;
  std::vector<Index> argmin_support;
  CVec argmin_b;
};

struct OmpOptions {
  /// Co-select the complex-conjugate partner of every picked mode.
  bool pair_lock = true;
  /// Relative tolerance for matching conjugate eigenvalues.
  double pair_tol = 1e-6;
};

struct OmpResult {
  SparseAmplitudes amplitudes;
  SelectionTrace trace;
};

/// Greedy selection with the log-scaled sparsity stopping rule. Iteration i
/// picks argmax_j |P_jᴴ res| over unselected j, refits q on the chosen columns
/// and records resnorm, res_scaled = resnorm/resnorm(1), ζ = log(|S|+1)/log(K+1)
/// and δ = |res_scaled − ζ|. The loop ends at the first iteration k with
/// δ(k) > δ(k−1), and iterate k is returned.
OmpResult omp_select(const AmplitudeProblem& problem, const OmpOptions& options = {});

struct AdmmOptions {
  double rho = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  Index max_iter = 10000;
};

struct SpDmdResult {
  double gamma = 0.0;
  SparseAmplitudes amplitudes;
  double performance_loss = 0.0;
  Index iterations = 0;
  bool converged = false;

  Index nnz() const { return amplitudes.nnz(); }
};

/// ℓ₁-penalized amplitudes for each γ (ADMM, then a least-squares polish on the
/// detected support). Results keep the order of `gammas`.
std::vector<SpDmdResult> spdmd_admm(const AmplitudeProblem& problem, const std::vector<double>& gammas,
                                    const AdmmOptions& options = {});

/// Smallest γ for which b = 0 is optimal: 2·max|qₖ|.
double gamma_max(const AmplitudeProblem& problem);

/// `count` log-spaced values from γ_max·ratio to γ_max.
std::vector<double> gamma_grid(const AmplitudeProblem& problem, Index count, double ratio = 1e-6);

/// 100·sqrt(J(b_sparse)/J(b_LS)). Both zero gives 0; J(b_LS) = 0 alone gives +inf.
double performance_loss(const AmplitudeProblem& problem, const CVec& b_sparse);
double performance_loss(const AmplitudeProblem& problem, const CVec& b_sparse, double j_least_squares);

}  // namespace pdmd
