#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pdmd/dmd_core.hpp"
#include "pdmd/embedding.hpp"
#include "pdmd/error.hpp"
#include "pdmd/rank_selection.hpp"

using namespace pdmd;

namespace {

struct Fixture {
  ReducedTrajectory traj;
  DelaySystem sys;
  Decomposition dec;
};

Fixture run(const Mat& data, MethodChoice choice, Index delay = 1, OperatorOptions options = {},
            RankCriterion rank = RankCriterion::energy_fraction(1.0 - 1e-14)) {
  SnapshotMatrix x;
  x.values = data;
  x.dt = 0.1;
  Fixture f;
  f.traj = pod_project(x, truncate(compute_svd(x.values), rank));
  f.sys = hankel_embed(f.traj, delay);
  f.dec = decompose(f.traj, f.sys, choice, options);
  return f;
}

Mat simulate(const Mat& A, const Vec& x0, Index m) {
  Mat x(A.rows(), m);
  x.col(0) = x0;
  for (Index k = 1; k < m; ++k) x.col(k) = A * x.col(k - 1);
  return x;
}

Mat rotation(double theta) {
  Mat r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// A real 3×3 system with eigenvalues 0.9 and 0.8·e^{±0.5i}.
Mat three_by_three(Mat* eigvecs = nullptr) {
  Mat block = Mat::Zero(3, 3);
  block(0, 0) = 0.9;
  block.bottomRightCorner(2, 2) = 0.8 * rotation(0.5);
  Mat T(3, 3);
  T << 1, 0.3, -0.2, 0.1, 1, 0.4, -0.3, 0.2, 1;
  if (eigvecs) *eigvecs = T;
  return T * block * T.inverse();
}

CVec sorted_by_value(CVec v) {
  std::sort(v.data(), v.data() + v.size(), [](cdouble a, cdouble b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

double max_gap(const CVec& a, const CVec& b) { return (sorted_by_value(a) - sorted_by_value(b)).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Eigenvalues, RecoverKnownSystem) {
  const Fixture f = run(simulate(three_by_three(), Vec::Ones(3), 20), MethodChoice::Direct);
  CVec expected(3);
  expected << 0.9, std::polar(0.8, 0.5), std::polar(0.8, -0.5);
  ASSERT_EQ(f.dec.spectrum.eigenvalues.size(), 3);
  EXPECT_LT(max_gap(f.dec.spectrum.eigenvalues, expected), 1e-10);
  EXPECT_LT(f.dec.spectrum.eigen_residual, 1e-12);
}

TEST(Eigenvalues, SortedByMagnitudeThenPhase) {
  const Fixture f = run(simulate(three_by_three(), Vec::Ones(3), 20), MethodChoice::Direct);
  const CVec& l = f.dec.spectrum.eigenvalues;
  EXPECT_NEAR(l[0].real(), 0.9, 1e-10);
  EXPECT_NEAR(std::arg(l[1]), -0.5, 1e-10);
  EXPECT_NEAR(std::arg(l[2]), 0.5, 1e-10);
}

TEST(Eigenvalues, StaticDataHasUnitEigenvalue) {
  const Fixture f = run(Mat::Constant(4, 10, 2.5), MethodChoice::Direct);
  ASSERT_EQ(f.dec.spectrum.eigenvalues.size(), 1);
  EXPECT_NEAR(std::abs(f.dec.spectrum.eigenvalues[0] - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(f.dec.spectrum.omega[0]), 0.0, 1e-10);
}

TEST(Eigenvalues, DiagonalSystem) {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 2.0;
  A(1, 1) = 0.5;
  const Fixture f = run(simulate(A, Vec::Ones(2), 8), MethodChoice::Direct);
  EXPECT_LT(max_gap(f.dec.spectrum.eigenvalues, (CVec(2) << 0.5, 2.0).finished()), 1e-10);
}

TEST(Eigenvalues, RotationIsOnUnitCircle) {
  const Fixture f = run(simulate(rotation(0.3), Vec::Unit(2, 0), 30), MethodChoice::Direct);
  for (const cdouble l : f.dec.spectrum.eigenvalues) {
    EXPECT_NEAR(std::abs(l), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(std::arg(l)), 0.3, 1e-12);
  }
}

TEST(Eigenvalues, ProjectedMatchesDirect) {
  const Mat z = simulate(three_by_three(), Vec::Ones(3), 40);
  Mat data(6, 40);
  data << z, 0.5 * z;
  data.row(4) += Mat::Ones(1, 40);
  OperatorOptions projected;
  projected.force_projected = true;
  const Fixture d = run(data, MethodChoice::Direct, 3);
  const Fixture p = run(data, MethodChoice::Direct, 3, projected);
  EXPECT_EQ(p.dec.op.method, OperatorMethod::Projected);
  // Compare the eigenvalues that are clearly nonzero; both paths share them.
  auto nonzero = [](const CVec& v) {
    std::vector<cdouble> out;
    for (const cdouble l : v)
      if (std::abs(l) > 1e-6) out.push_back(l);
    return CVec(Eigen::Map<const CVec>(out.data(), static_cast<Index>(out.size())));
  };
  const CVec dn = nonzero(d.dec.spectrum.eigenvalues);
  const CVec pn = nonzero(p.dec.spectrum.eigenvalues);
  ASSERT_EQ(dn.size(), pn.size());
  EXPECT_LT(max_gap(dn, pn), 1e-9);
}

TEST(Eigenvalues, JordanBlockIsFlagged) {
  ReducedOperator op;
  op.A = Mat::Identity(2, 2);
  op.A(0, 1) = 1.0;
  const DmdSpectrum s = eig_direct(op);
  EXPECT_TRUE(s.ill_conditioned);
  EXPECT_GE(s.eigenvector_condition, 1e8);
}

TEST(Eigenvalues, WellConditionedSystemIsNotFlagged) {
  ReducedOperator op;
  op.A = three_by_three();
  EXPECT_FALSE(eig_direct(op).ill_conditioned);
}

TEST(Modes, AlignWithTrueEigenvectors) {
  Mat T;
  const Mat A = three_by_three(&T);
  const Fixture f = run(simulate(A, Vec::Ones(3), 20), MethodChoice::Direct);
  // Eigenvectors of A: column 0 of T for 0.9, T·(1, ∓i)/√2 for the pair.
  CMat truth(3, 3);
  truth.col(0) = T.col(0).cast<cdouble>();
  truth.col(1) = T.col(1).cast<cdouble>() + cdouble(0, 1) * T.col(2).cast<cdouble>();
  truth.col(2) = T.col(1).cast<cdouble>() - cdouble(0, 1) * T.col(2).cast<cdouble>();
  for (Index k = 0; k < 3; ++k) {
    const CVec phi = f.dec.spectrum.physical_modes.col(k);
    double best = 0.0;
    for (Index j = 0; j < 3; ++j)
      best = std::max(best, std::abs(phi.dot(truth.col(j))) / (phi.norm() * truth.col(j).norm()));
    EXPECT_NEAR(best, 1.0, 1e-10);
  }
}

TEST(Modes, ConjugatePairsAreConjugate) {
  const Fixture f = run(simulate(three_by_three(), Vec::Ones(3), 20), MethodChoice::Direct);
  const auto& s = f.dec.spectrum;
  for (Index k = 0; k < s.eigenvalues.size(); ++k) {
    if (std::abs(s.eigenvalues[k].imag()) < 1e-10) continue;
    Index partner = -1;
    for (Index j = 0; j < s.eigenvalues.size(); ++j)
      if (j != k && std::abs(s.eigenvalues[j] - std::conj(s.eigenvalues[k])) < 1e-10) partner = j;
    ASSERT_GE(partner, 0);
    // Eigenvectors are defined up to a phase; compare the projector-invariant |⟨v_j, conj v_k⟩|.
    const CVec a = s.physical_modes.col(k).conjugate();
    const CVec b = s.physical_modes.col(partner);
    EXPECT_NEAR(std::abs(a.dot(b)) / (a.norm() * b.norm()), 1.0, 1e-10);
  }
}

TEST(Tls, EqualsLeastSquaresOnCleanData) {
  const Mat data = simulate(three_by_three(), Vec::Ones(3), 20);
  const Fixture d = run(data, MethodChoice::Direct);
  const Fixture t = run(data, MethodChoice::Tls);
  EXPECT_EQ(t.dec.op.method, OperatorMethod::Tls);
  EXPECT_LT(max_gap(d.dec.spectrum.eigenvalues, t.dec.spectrum.eigenvalues), 1e-9);
}

TEST(Tls, PureGrowth) {
  Mat x(1, 10);
  for (Index k = 0; k < 10; ++k) x(0, k) = std::pow(2.0, static_cast<double>(k));
  const Fixture t = run(x, MethodChoice::Tls);
  ASSERT_EQ(t.dec.spectrum.eigenvalues.size(), 1);
  EXPECT_NEAR(std::abs(t.dec.spectrum.eigenvalues[0] - 2.0), 0.0, 1e-10);
}

TEST(Exponents, PrincipalLogarithm) {
  CVec l(3);
  l << std::polar(1.0, std::numbers::pi / 4), 1.0, 0.0;
  const CVec w = continuous_exponents(l, 0.1);
  EXPECT_NEAR(w[0].real(), 0.0, 1e-12);
  EXPECT_NEAR(w[0].imag(), 7.853981633974483, 1e-12);
  EXPECT_EQ(w[1], cdouble(0.0, 0.0));
  EXPECT_EQ(w[2], cdouble(0.0, 0.0));
}

TEST(Exponents, ZeroEigenvalueIsMarked) {
  ReducedOperator op;
  op.A = Mat::Zero(2, 2);
  op.A(0, 0) = 0.7;
  const DmdSpectrum s = eig_direct(op);
  ASSERT_EQ(s.eigenvalues.size(), 2);
  EXPECT_FALSE(s.zero_eigenvalue[0]);
  EXPECT_TRUE(s.zero_eigenvalue[1]);
}

TEST(Routing, DelayPicksOperator) {
  EXPECT_EQ(route_method(MethodChoice::Auto, 1), OperatorMethod::Tls);
  EXPECT_EQ(route_method(MethodChoice::Auto, 5), OperatorMethod::Direct);
  EXPECT_EQ(route_method(MethodChoice::Direct, 1), OperatorMethod::Direct);
  EXPECT_EQ(route_method(MethodChoice::Tls, 5), OperatorMethod::Tls);
}

TEST(Routing, LargeStateUsesProjectedPath) {
  OperatorOptions small;
  small.direct_limit = 4;
  const Fixture f = run(simulate(three_by_three(), Vec::Ones(3), 30), MethodChoice::Direct, 3, small);
  EXPECT_EQ(f.dec.op.method, OperatorMethod::Projected);
}
