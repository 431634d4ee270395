#include "pdmd/embedding.hpp"

#include "pdmd/error.hpp"

namespace pdmd {

ReducedTrajectory pod_project(const SnapshotMatrix& data, const TruncatedSvd& tsvd) {
  if (tsvd.U.rows() != data.rows() || tsvd.V.rows() != data.cols())
    throw Error(ErrorCode::DimensionMismatch, "truncated SVD does not match the snapshot matrix");
  ReducedTrajectory out;
  out.coords = tsvd.S.asDiagonal() * tsvd.V.transpose();
  out.basis = tsvd.U;
  out.dt = data.dt;
  return out;
}

void validate_delay(Index delay, Index snapshots) {
  if (delay < 1) throw Error(ErrorCode::InvalidArgument, "delay order must be at least 1");
  if (delay > snapshots - 1) throw Error(ErrorCode::InvalidArgument, "delay order must not exceed m - 1");
}

DelaySystem hankel_embed(const ReducedTrajectory& traj, Index delay) {
  const Index r = traj.rank();
  const Index m = traj.snapshots();
  validate_delay(delay, m);
  const Index cols = m - delay + 1;
  DelaySystem out;
  out.delay = delay;
  out.rank = r;
  out.dt = traj.dt;
  out.augmented.resize(r * delay, cols);
  for (Index i = 0; i < delay; ++i) out.augmented.middleRows(i * r, r) = traj.coords.middleCols(i, cols);
  return out;
}

}  // namespace pdmd
