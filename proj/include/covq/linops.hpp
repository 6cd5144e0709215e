// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_LINOPS_HPP
#define COVQ_LINOPS_HPP

#include <optional>
#include <string>
#include <vector>

#include "covq/types.hpp"

#include <json.hpp>

namespace covq {

// Tolerances for the finite-dimensional operator toolkit. Positivity is
// relative: eigenvalues >= -positivity_rel * ||M|| are accepted and clamped.
struct LinopsTol {
  double hermitian_rel = 1e-12;
  double positivity_rel = 1e-10;
};

Complex trace(const Matrix& m);
double hs_norm(const Matrix& m);      // Frobenius / Schatten-2
double trace_norm(const Matrix& m);   // Schatten-1
double trace_norm_hermitian(const Matrix& m);  // sum |eigenvalues|, Hermitian input

Matrix adjoint(const Matrix& m);
Matrix hermitize(const Matrix& m);    // (M + M^dagger) / 2

bool is_hermitian(const Matrix& m, double tol_rel = 1e-12);

/// Eigenvalues of a (pre-symmetrized) Hermitian matrix, ascending.
RealVector hermitian_eigenvalues(const Matrix& m);
double min_eigenvalue(const Matrix& m);

/// Positive square root of a PSD matrix. Symmetrizes first, clamps
/// eigenvalues in [-tol, 0) to zero and rejects anything below.
Matrix psd_sqrt(const Matrix& m, const LinopsTol& tol = LinopsTol{});

/// Nearest-PSD clamp: symmetrize and zero out negative eigenvalues.
Matrix psd_clamp(const Matrix& m);

/// Positive trace-one operator on the truncated space.
class DensityOperator {
 public:
  /// Validates: trace within trace_tol of one, min eigenvalue >= -psd_tol.
  explicit DensityOperator(Matrix rho, double trace_tol = 1e-12, double psd_tol = 1e-10);

  /// Clamp negative eigenvalues and renormalize the trace, then validate.
  static DensityOperator project(const Matrix& rho);

  static DensityOperator pure(const Vector& state);

  const Matrix& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }

  /// Spectral factors with eigenvalue > cutoff, largest first.
  struct Factor {
    double weight;
    covq::Vector vec;
  };
  std::vector<Factor> factors(double cutoff = 1e-14) const;

 private:
  Matrix rho_;
};

double trace_distance(const DensityOperator& a, const DensityOperator& b);

// JSON form: {"rows": r, "cols": c, "data": [re, im, re, im, ...]} row-major.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

std::string matrix_to_csv(const Matrix& m);

} // namespace covq

#endif
