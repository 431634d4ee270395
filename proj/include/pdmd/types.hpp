#pragma once

#include <complex>

#include <Eigen/Core>

namespace pdmd {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cdouble = std::complex<double>;
using Index = Eigen::Index;

}  // namespace pdmd
