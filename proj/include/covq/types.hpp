// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_TYPES_HPP
#define COVQ_TYPES_HPP

#include <complex>
#include <Eigen/Dense>

namespace covq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Largest singular value; the operator norm used for residual reports.
double operator_norm(const Matrix& m);

} // namespace covq

#endif
