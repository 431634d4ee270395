#pragma once

#include <string>
#include <vector>

#include "pdmd/embedding.hpp"
#include "pdmd/rank_selection.hpp"
#include "pdmd/types.hpp"

namespace pdmd {

enum class OperatorMethod { Direct, Projected, Tls };

std::string to_string(OperatorMethod method);

/// Linear operator advancing one snapshot in delay-embedded reduced coordinates.
///
/// Direct and Tls operators act on the full (r·d)-dimensional state. Projected
/// operators act on the leading inner singular subspace of X1, whose factors are
/// kept in `inner_U`, `inner_S`, `inner_V`.
struct ReducedOperator {
  Mat A;
  OperatorMethod method = OperatorMethod::Direct;
  Mat inner_U;
  Vec inner_S;
  Mat inner_V;
  /// Numerical rank of X1 (or of the stacked TLS matrix).
  Index numerical_rank = 0;
  std::vector<std::string> warnings;
};

struct OperatorOptions {
  /// States up to this dimension use the Direct path.
  Index direct_limit = 1024;
  /// Inner truncation for the Projected path.
  RankCriterion inner = RankCriterion::energy_fraction(1.0 - 1e-10);
  /// Singular values below rel_tol·σ₁ count as zero in pseudoinverses.
  double rel_tol = 1e-10;
  /// Forces the Projected path regardless of state dimension.
  bool force_projected = false;
};

ReducedOperator reduced_operator(const DelaySystem& sys, const OperatorOptions& options = {});

struct DmdSpectrum {
  /// Discrete-time eigenvalues, sorted by |λ| descending then phase ascending.
  CVec eigenvalues;
  /// Eigenvectors of the reduced operator, unit 2-norm columns.
  CMat eigenvectors;
  /// Continuous exponents Log(λ)/Δt (principal branch); zero eigenvalues get 0
  /// here and are marked in `zero_eigenvalue`.
  CVec omega;
  std::vector<bool> zero_eigenvalue;
  /// Modes in augmented reduced coordinates (r·d rows).
  CMat modes;
  /// Modes lifted to the original measurement space (n rows).
  CMat physical_modes;
  /// max_k ‖A w_k − λ_k w_k‖ / ‖A‖.
  double eigen_residual = 0.0;
  /// 2-norm condition number of the eigenvector matrix.
  double eigenvector_condition = 1.0;
  bool ill_conditioned = false;
};

/// Eigenvalues with |λ| at or below this are treated as zero.
inline constexpr double kZeroEigenvalueTol = 1e-13;

/// Eigendecomposition of `op.A` (fills eigenvalues, eigenvectors, residual and
/// conditioning). Modes are left empty.
DmdSpectrum eig_direct(const ReducedOperator& op);

/// Augmented-space modes for the operator's path. Projected: X2·V1·Σ1⁻¹·W with
/// the plain projected mode U1·w used where λ = 0. Direct and Tls: the
/// eigenvectors themselves, since the operator already acts on augmented
/// coordinates.
CMat exact_modes(const DelaySystem& sys, const ReducedOperator& op, const DmdSpectrum& spectrum);

struct TlsResult {
  ReducedOperator op;
  DmdSpectrum spectrum;
};

/// Total-least-squares operator from the SVD of Z = [X1; X2].
TlsResult tls_operator(const DelaySystem& sys);

/// Principal-branch Log(λ)/Δt; zero eigenvalues map to 0.
CVec continuous_exponents(const CVec& eigenvalues, double dt);

/// Fills `physical_modes` (basis · first r rows of the modes) and `omega`.
void to_physical(DmdSpectrum& spectrum, const ReducedTrajectory& traj, const DelaySystem& sys);

enum class MethodChoice { Auto, Direct, Tls };

/// Routing: delay d = 1 uses total least squares, d > 1 the eigendecomposition
/// of the least-squares operator; `choice` overrides.
OperatorMethod route_method(MethodChoice choice, Index delay);

/// Full decomposition of a delay system: operator, spectrum, modes and lift.
struct Decomposition {
  ReducedOperator op;
  DmdSpectrum spectrum;
};

Decomposition decompose(const ReducedTrajectory& traj, const DelaySystem& sys, MethodChoice choice,
                        const OperatorOptions& options = {});

}  // namespace pdmd
