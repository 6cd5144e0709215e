// SPDX-License-Identifier: Apache-2.0

#include "covq/linops.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace covq {

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // sigma_max^2 = lambda_max(M* M); cheaper than a full SVD at this size.
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Complex trace(const Matrix& m) { return m.trace(); }

double hs_norm(const Matrix& m) { return m.norm(); }

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double trace_norm_hermitian(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

Matrix adjoint(const Matrix& m) { return m.adjoint(); }

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

bool is_hermitian(const Matrix& m, double tol_rel) {
  const double scale = std::max(1.0, m.norm());
  return (m - m.adjoint()).norm() <= tol_rel * scale;
}

RealVector hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Matrix& m) {
  return hermitian_eigenvalues(m)(0);
}

Matrix psd_sqrt(const Matrix& m, const LinopsTol& tol) {
  const double scale = std::max(m.norm(), 1e-300);
  if ((m - m.adjoint()).norm() > 1e-8 * scale)
    throw std::invalid_argument("psd_sqrt: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector ev = es.eigenvalues();
  const double floor = -tol.positivity_rel * std::max(scale, std::abs(ev(ev.size() - 1)));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor)
      throw std::invalid_argument("psd_sqrt: matrix has a negative eigenvalue beyond tolerance");
    ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix psd_clamp(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

DensityOperator::DensityOperator(Matrix rho, double trace_tol, double psd_tol)
    : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols())
    throw std::invalid_argument("density operator must be square");
  if (std::abs(rho_.trace() - Complex(1.0, 0.0)) > trace_tol)
    throw std::invalid_argument("density operator must have unit trace");
  if (!is_hermitian(rho_, 1e-10))
    throw std::invalid_argument("density operator must be Hermitian");
  if (min_eigenvalue(rho_) < -psd_tol)
    throw std::invalid_argument("density operator must be positive semidefinite");
}

DensityOperator DensityOperator::project(const Matrix& rho) {
  Matrix p = psd_clamp(rho);
  const double tr = p.trace().real();
  if (!(tr > 0.0))
    throw std::invalid_argument("density projection: nonpositive trace");
  return DensityOperator(p / tr);
}

DensityOperator DensityOperator::pure(const Vector& state) {
  const double n2 = state.squaredNorm();
  if (!(n2 > 0.0)) throw std::invalid_argument("pure state must be nonzero");
  return DensityOperator((state * state.adjoint()) / n2);
}

std::vector<DensityOperator::Factor> DensityOperator::factors(double cutoff) const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_);
  std::vector<Factor> out;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    const double w = es.eigenvalues()(i);
    if (w <= cutoff) break;
    out.push_back(Factor{w, es.eigenvectors().col(i)});
  }
  return out;
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  return 0.5 * trace_norm(a.matrix() - b.matrix());
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()) * 2);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      data.push_back(m(r, c).real());
      data.push_back(m(r, c).imag());
    }
  }
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols * 2)
    throw std::invalid_argument("matrix json: data length mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double re = data[k++].get<double>();
      const double im = data[k++].get<double>();
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", m(r, c).real(), m(r, c).imag());
      out += buf;
      if (c + 1 < m.cols()) out += ',';
    }
    out += '\n';
  }
  return out;
}

} // namespace covq
