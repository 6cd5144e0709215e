// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_DUFLO_HPP
#define COVQ_DUFLO_HPP

#include <string>
#include <vector>

#include "covq/group.hpp"
#include "covq/linops.hpp"
#include "covq/rep.hpp"
#include "covq/types.hpp"

namespace covq {

/// Square root C of the formal degree, held spectrally: orthonormal columns
/// `basis` and positive eigenvalues `c_values` of C on their span. The
/// regularized inverse zeroes directions whose eigenvalue falls below
/// floor_rel * max(c); those directions are outside the numerical domain of
/// C^{-1}, the finite-dimensional surrogate for D(C^{-1}).
class FormalDegree {
 public:
  FormalDegree(Matrix basis, RealVector c_values, double floor_rel = 1e-6);

  /// Diagonal construction on the full space (basis = identity).
  static FormalDegree diagonal(RealVector c_values, double floor_rel = 1e-6);

  int dim() const { return static_cast<int>(basis_.rows()); }
  int rank() const { return static_cast<int>(basis_.cols()); }
  bool is_diagonal() const { return diagonal_; }

  const Matrix& basis() const { return basis_; }
  const RealVector& c_values() const { return cvals_; }
  double floor_abs() const { return floor_abs_; }

  Matrix c_matrix() const;
  Matrix c_inverse_matrix() const;  // regularized

  Vector apply_c(const Vector& v) const;
  Vector apply_c_inverse(const Vector& v) const;
  Matrix apply_c(const Matrix& m) const;          // C * M
  Matrix apply_c_inverse(const Matrix& m) const;  // C^{-1} * M
  Matrix conjugate_c(const Matrix& m) const;          // C M C
  Matrix conjugate_c_inverse(const Matrix& m) const;  // C^{-1} M C^{-1}

  /// Fraction of |v|^2 in directions where C^{-1} is floored away (outside
  /// the numerical D(C^{-1})), including any basis complement.
  double outside_domain_fraction(const Vector& v) const;
  double outside_domain_fraction(const Matrix& m) const;

 private:
  Matrix basis_;
  RealVector cvals_;
  RealVector cinv_;  // floored
  double floor_abs_ = 0.0;
  bool diagonal_ = false;
};

/// Global constant of the affine formal degree under left Haar db da / a^2:
/// C^{-2} acts as multiplication by kappa / xi on the frequency half-line.
/// Pinned against estimate_degree on an admissible vector and frozen; the
/// continuum value for this normalization is 2 pi.
extern const double kAffineKappa;

/// Unimodular phase-space constant: C^{-2} = d * I with d = 2 pi for
/// lambda = dq dp (exact on the discrete torus).
extern const double kWeylFormalConstant;

/// Closed-form degrees for the two concrete representations.
FormalDegree analytic_affine_degree(const Representation& rep, double floor_rel = 1e-6);
FormalDegree analytic_weyl_degree(const Representation& rep, double floor_rel = 1e-6);

/// True when the node lies in the outer `band` fraction of the grid box.
bool in_chart_boundary_band(GroupKind kind, const ChartBounds& box, const GridNode& node,
                            double band);

/// A grid spanning the full Weyl torus is the whole effective group; seam
/// mass is periodic recurrence, not truncation.
bool covers_weyl_torus(const Representation& rep, const ChartBounds& box);

/// The Duflo-Moore quadratic form phi -> int |<chi|U(g) phi>|^2 dlambda(g)
/// over the given grid; equals <phi| C^{-2} phi> when the grid captures the
/// integrand.
double quadratic_form(const Representation& rep, const HaarGrid& grid,
                      const Vector& chi, const Vector& phi);

struct EstimateOptions {
  Vector s_vector;                    // estimator state chi; empty -> reference_state()
  double floor_rel = 1e-6;
  double boundary_band = 0.05;        // outer chart band counted as boundary
  double boundary_threshold = 5e-3;   // error above this boundary mass fraction
  double psd_tol = 1e-8;              // PSD tolerance for the estimated form
};

struct DegreeEstimate {
  FormalDegree degree;
  Matrix probes;            // as supplied
  Matrix quad_form;         // probe-basis matrix B_ij = <phi_i|C^{-2}|phi_j>
  Matrix compressed;        // orthonormalized-span matrix of C^{-2}
  RealVector spectrum;      // eigenvalues of `compressed`, ascending
  double boundary_fraction; // integrand mass in the outer grid band
  std::vector<std::string> warnings;
};

/// Estimates C^{-2} from group-integral quadratures of the quadratic form,
/// polarized over probe pairs (the weighted Gram accumulation is the 4-term
/// complex polarization identity in closed form), symmetrized,
/// eigendecomposed on the probe span, inverted above the floor.
DegreeEstimate estimate_degree(const Representation& rep, const HaarGrid& grid,
                               const Matrix& probes,
                               const EstimateOptions& opt = EstimateOptions{});

/// Log bumps suitable as estimation probes across [xi_lo, xi_hi] (affine).
Matrix default_affine_probes(const Representation& rep, double xi_lo = 0.55,
                             double xi_hi = 8.0, double sigma_u = 0.2,
                             int spacing_nodes = 4);

/// Default estimation grid for each group; the affine window is sized so
/// the estimator state anchors the integrand well inside it.
HaarGrid default_estimation_grid(const Representation& rep);

struct CommutationRow {
  GroupElement g;
  double residual_c;     // ||U(g) C - Delta(g)^{-1/2} C U(g)|| / ||C||
  double residual_cinv;  // ||U(g) C^{-1} - Delta(g)^{+1/2} C^{-1} U(g)|| / ||C^{-1}||
};

struct CommutationReport {
  std::vector<CommutationRow> rows;
  double max_c = 0.0;
  double mean_c = 0.0;
  double max_cinv = 0.0;
  double mean_cinv = 0.0;
};

CommutationReport verify_commutation(const Representation& rep, const FormalDegree& deg,
                                     const std::vector<GroupElement>& samples);

struct OrthogonalityResult {
  double lhs = 0.0;  // quadrature of int Tr[A beta(g)(S)] dlambda(g)
  double rhs = 0.0;  // Tr[A] ||C^{-1} sqrt(S)||_HS^2
  double boundary_fraction = 0.0;
  double outside_domain = 0.0;  // floored mass of sqrt(S)
};

OrthogonalityResult orthogonality_identity(const Representation& rep,
                                           const FormalDegree& deg, const HaarGrid& grid,
                                           const Matrix& a_op, const Matrix& s_op,
                                           double boundary_threshold = 5e-3);

/// Evaluates the quadratic form on nested b-windows (affine) or q-windows
/// (Weyl). `saturated` when the last enlargement changed the value by less
/// than rel_tol; admissible vectors saturate, vectors outside D(C^{-1})
/// keep growing.
struct WindowSweep {
  std::vector<double> halfwidths;
  std::vector<double> values;
  bool saturated = false;
};

WindowSweep domain_window_sweep(const Representation& rep, const Vector& chi,
                                const Vector& phi, const std::vector<double>& halfwidths,
                                double rel_tol = 1e-3);

} // namespace covq

#endif
