#include <cmath>

#include <gtest/gtest.h>

#include "pdmd/dmd_core.hpp"
#include "pdmd/error.hpp"
#include "pdmd/recon_forecast.hpp"

using namespace pdmd;

namespace {

// Model whose modes already live in measurement space (identity basis).
DmdModel model(const CMat& modes, const CVec& lambda, const CVec& b, double dt = 0.1, Index m = 10) {
  DmdModel md;
  md.modes = modes;
  md.physical_modes = modes;
  md.lambda = lambda;
  md.omega = continuous_exponents(lambda, dt);
  md.b = b;
  md.dt = dt;
  md.basis = Mat::Identity(modes.rows(), modes.rows());
  md.rank = modes.rows();
  md.training_m = m;
  return md;
}

}  // namespace

TEST(Reconstruct, StaticModeIsConstant) {
  const DmdModel md = model(CMat::Constant(2, 1, 1.0), CVec::Ones(1), CVec::Constant(1, 3.0));
  const Evaluation e = reconstruct_training(md);
  EXPECT_EQ(e.snapshots.cols(), 10);
  EXPECT_LT((e.snapshots.values - Mat::Constant(2, 10, 3.0)).norm(), 1e-12);
  EXPECT_FALSE(e.diverged);
}

TEST(Reconstruct, ConjugatePairIsReal) {
  CMat modes(2, 2);
  modes.col(0) << cdouble(1, 1), cdouble(0, 2);
  modes.col(1) = modes.col(0).conjugate();
  const cdouble l = std::polar(0.95, 0.6);
  const cdouble b(0.3, -1.2);
  const DmdModel md = model(modes, (CVec(2) << l, std::conj(l)).finished(), (CVec(2) << b, std::conj(b)).finished());
  const Evaluation e = reconstruct_training(md);
  EXPECT_LT(e.imag_fraction, 1e-14);
  // Real part doubles the single-mode contribution.
  const cdouble first = modes(0, 0) * std::pow(l, 3) * b;
  EXPECT_NEAR(e.snapshots.values(0, 3), 2.0 * first.real(), 1e-12);
}

TEST(Reconstruct, DecayingModeHalvesEachStep) {
  const DmdModel md = model(CMat::Ones(1, 1), CVec::Constant(1, 0.5), CVec::Constant(1, 8.0));
  const Evaluation e = reconstruct_training(md);
  for (Index j = 1; j < 10; ++j) EXPECT_NEAR(e.snapshots.values(0, j), 0.5 * e.snapshots.values(0, j - 1), 1e-12);
  EXPECT_NEAR(e.snapshots.values(0, 3), 1.0, 1e-12);
}

TEST(Reconstruct, NeutralModesStayBounded) {
  CMat modes(1, 3);
  modes << 1.0, cdouble(0.5, 0.5), cdouble(0.5, -0.5);
  CVec lambda(3);
  lambda << 1.0, std::polar(1.0, 0.2), std::polar(1.0, -0.2);
  CVec b(3);
  b << 1.0, cdouble(2, 1), cdouble(2, -1);
  const DmdModel md = model(modes, lambda, b);
  const double bound = (modes.row(0).transpose().cwiseAbs().cwiseProduct(b.cwiseAbs())).sum();
  const Evaluation e = forecast(md, 5000);
  EXPECT_LE(e.snapshots.values.cwiseAbs().maxCoeff(), bound * (1 + 1e-12));
}

TEST(Reconstruct, ZeroEigenvalueUsesDiscretePowers) {
  CMat modes = CMat::Identity(2, 2);
  CVec lambda(2);
  lambda << 0.8, 0.0;
  const DmdModel md = model(modes, lambda, CVec::Ones(2));
  const Evaluation e = reconstruct_training(md);
  EXPECT_TRUE(e.discrete);
  EXPECT_DOUBLE_EQ(e.snapshots.values(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(e.snapshots.values(1, 1), 0.0);
  EXPECT_NEAR(e.snapshots.values(0, 2), 0.64, 1e-15);
  EXPECT_THROW(reconstruct(md, {0.05}), Error);
}

TEST(Reconstruct, UnusedZeroEigenvalueKeepsContinuousTime) {
  CVec lambda(2);
  lambda << 0.8, 0.0;
  CVec b(2);
  b << 1.0, 0.0;
  const Evaluation e = reconstruct(model(CMat::Identity(2, 2), lambda, b), {0.05});
  EXPECT_FALSE(e.discrete);
  EXPECT_NEAR(e.snapshots.values(0, 0), std::sqrt(0.8), 1e-12);
}

TEST(Reconstruct, DivergenceIsClamped) {
  const DmdModel md = model(CMat::Ones(1, 1), CVec::Constant(1, 10.0), CVec::Ones(1));
  const Evaluation e = forecast(md, 20);
  EXPECT_TRUE(e.diverged);
  EXPECT_EQ(e.snapshots.values(0, 19), kDivergenceClamp);
}

TEST(Forecast, ContinuesTheTrainingWindow) {
  const cdouble l = std::polar(0.97, 0.4);
  CMat modes(1, 2);
  modes << 1.0, 1.0;
  const DmdModel md = model(modes, (CVec(2) << l, std::conj(l)).finished(), CVec::Ones(2), 0.1, 12);
  const Evaluation all = reconstruct(md, [] {
    std::vector<double> t(20);
    for (int j = 0; j < 20; ++j) t[j] = 0.1 * j;
    return t;
  }());
  const Evaluation train = reconstruct_training(md);
  const Evaluation ahead = forecast(md, 8);
  EXPECT_LT((all.snapshots.values.leftCols(12) - train.snapshots.values).norm(), 1e-12);
  EXPECT_LT((all.snapshots.values.rightCols(8) - ahead.snapshots.values).norm(), 1e-12);
  EXPECT_THROW(forecast(md, 0), Error);
}

TEST(Forecast, RespectsTimeOrigin) {
  DmdModel md = model(CMat::Ones(1, 1), CVec::Constant(1, 0.5), CVec::Ones(1));
  md.t0 = 3.0;
  EXPECT_NEAR(reconstruct(md, {3.0}).snapshots.values(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(forecast(md, 1).snapshots.values(0, 0), std::pow(0.5, 10), 1e-12);
}

TEST(ModelValidate, InconsistentSizes) {
  DmdModel md = model(CMat::Ones(1, 1), CVec::Ones(1), CVec::Ones(1));
  md.b = CVec::Ones(2);
  EXPECT_THROW(md.validate(), Error);
}

TEST(ErrorMetrics, FrobeniusExample) {
  Mat truth = Mat::Ones(2, 2);
  Mat approx = truth;
  approx(1, 0) = 1.5;
  EXPECT_NEAR(frobenius_error(truth, approx), 25.0, 1e-12);
  EXPECT_DOUBLE_EQ(frobenius_error(truth, truth), 0.0);
  EXPECT_THROW(frobenius_error(Mat::Zero(2, 2), approx), Error);
  EXPECT_THROW(frobenius_error(truth, Mat::Ones(2, 3)), Error);
}

TEST(ErrorMetrics, DynamicErrorIsColumnLocal) {
  Mat truth(2, 4);
  truth << 3, 1, 0, 2, 4, 1, 0, 2;
  Mat approx = truth;
  approx(0, 0) = 0.0;
  const DynamicError d = dynamic_error(truth, approx);
  EXPECT_NEAR(d.err[0], 3.0 / 5.0, 1e-15);
  EXPECT_EQ(d.err[1], 0.0);
  EXPECT_TRUE(d.undefined[2]);
  EXPECT_FALSE(d.undefined[3]);
  EXPECT_EQ(d.err[3], 0.0);
}

TEST(ErrorMetrics, FrobeniusIsWeightedDynamicError) {
  Mat truth(3, 5), approx(3, 5);
  truth << 1, 2, 3, 4, 5, -1, 0.5, 2, 1, 0, 3, 3, -2, 0.1, 1;
  approx = truth * 0.9;
  approx(2, 3) += 0.7;
  const DynamicError d = dynamic_error(truth, approx);
  double num = 0.0;
  for (Index j = 0; j < 5; ++j) num += d.err[j] * d.err[j] * truth.col(j).squaredNorm();
  EXPECT_NEAR(frobenius_error(truth, approx), 100.0 * std::sqrt(num / truth.squaredNorm()), 1e-12);
}

TEST(ErrorMetrics, ReportConcatenatesWindows) {
  const Mat truth = Mat::Ones(2, 3);
  const Mat ahead = Mat::Constant(2, 2, 2.0);
  const ErrorReport r = make_error_report(truth, truth, ahead, ahead * 1.1, 0.5, 1.0);
  EXPECT_EQ(r.split, 3);
  EXPECT_EQ(r.dynamic.err.size(), 5u);
  EXPECT_DOUBLE_EQ(r.frobenius_recon_pct, 0.0);
  ASSERT_TRUE(r.frobenius_forecast_pct);
  EXPECT_NEAR(*r.frobenius_forecast_pct, 10.0, 1e-12);
  EXPECT_NEAR(r.dynamic.err[4], 0.1, 1e-12);
  EXPECT_FALSE(make_error_report(truth, truth, Mat(2, 0), Mat(2, 0), 0.5).frobenius_forecast_pct);
}
