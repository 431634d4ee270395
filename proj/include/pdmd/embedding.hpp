#pragma once

#include "pdmd/datasets.hpp"
#include "pdmd/rank_selection.hpp"
#include "pdmd/types.hpp"

namespace pdmd {

/// Data expressed in truncated POD coordinates: coords = diag(S)·Vᵀ (r×m).
struct ReducedTrajectory {
  Mat coords;
  Mat basis;
  double dt = 1.0;

  Index rank() const { return coords.rows(); }
  Index snapshots() const { return coords.cols(); }
};

ReducedTrajectory pod_project(const SnapshotMatrix& data, const TruncatedSvd& tsvd);

/// Hankel (time-delay) embedding of a reduced trajectory.
///
/// `augmented` is (r·d)×(m−d+1); block row i, column j holds coords column i+j.
/// The shifted pair used for the linear operator is X1 = columns [0, m−d) and
/// X2 = columns [1, m−d+1).
struct DelaySystem {
  Index delay = 1;
  Index rank = 0;
  double dt = 1.0;
  Mat augmented;

  Index state_dim() const { return augmented.rows(); }
  Index pairs() const { return augmented.cols() - 1; }
  auto x1() const { return augmented.leftCols(augmented.cols() - 1); }
  auto x2() const { return augmented.rightCols(augmented.cols() - 1); }
};

/// Throws (InvalidArgument) unless 1 ≤ d ≤ m−1.
void validate_delay(Index delay, Index snapshots);

DelaySystem hankel_embed(const ReducedTrajectory& traj, Index delay);

}  // namespace pdmd
