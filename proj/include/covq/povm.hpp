// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_POVM_HPP
#define COVQ_POVM_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "covq/duflo.hpp"
#include "covq/group.hpp"
#include "covq/linops.hpp"
#include "covq/rep.hpp"
#include "covq/types.hpp"

#include <json.hpp>

namespace covq {

/// Uniform tiling of a chart region; axis 1 is log a for the affine group,
/// so affine cells translate onto each other exactly.
std::vector<BorelCell> make_partition(GroupKind kind, const ChartRegion& region,
                                      int n0, int n1);

struct BuildOptions {
  int quad_order = 4;
  QuadratureRule rule = QuadratureRule::Midpoint;
  double psd_tol = 1e-8;      // per-cell min eigenvalue gate (relative to ||E(B)||)
  int broken_cell = -1;       // >= 0: conjugate the density on that cell (negative control)
  std::optional<GroupElement> broken_g;  // defaults per group kind
};

/// Covariant positive operator measure on a finite partition, with an
/// on-demand cell evaluator backed by the generating (S, C) when built by
/// construction. E(B) = int_B C beta(g)(S) C dlambda~(g).
class CovariantObservable {
 public:
  static CovariantObservable build(const DensityOperator& s, const FormalDegree& c,
                                   const Representation& rep,
                                   const std::vector<BorelCell>& partition,
                                   const BuildOptions& opt = BuildOptions{});

  /// Observable loaded from stored cell operators; no evaluator beyond the
  /// stored partition.
  static CovariantObservable external(GroupKind kind, std::vector<BorelCell> partition,
                                      std::vector<Matrix> cell_ops);

  GroupKind kind() const { return kind_; }
  const std::vector<BorelCell>& partition() const { return partition_; }
  const std::vector<Matrix>& cell_operators() const { return cell_ops_; }
  const ChartRegion& region() const { return region_; }
  bool has_provenance() const { return provenance_ != nullptr; }

  const Representation& rep() const;
  const FormalDegree& degree() const;
  const DensityOperator& generator() const;

  /// Quadrature of the defining integral over an arbitrary chart rectangle
  /// (provenance required). Empty cells give the zero operator.
  Matrix evaluate_cell(const BorelCell& cell) const;

  /// Stored operator when `cell` coincides with a partition cell, fresh
  /// quadrature otherwise.
  Matrix cell_operator(const BorelCell& cell) const;

  /// Sum of the partition cell operators, fixed (partition) order.
  Matrix total() const;

  double min_cell_eigenvalue() const { return min_cell_eig_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  int broken_cell() const { return broken_cell_; }

 private:
  CovariantObservable() = default;

  struct Provenance;

  GroupKind kind_ = GroupKind::Affine;
  std::vector<BorelCell> partition_;
  std::vector<Matrix> cell_ops_;
  ChartRegion region_{};
  double min_cell_eig_ = 0.0;
  int broken_cell_ = -1;
  std::vector<std::string> warnings_;
  std::shared_ptr<const Provenance> provenance_;
};

/// || U(g)* E(B) U(g) - E(g^{-1} B) ||_2, the translated side evaluated by
/// direct quadrature. Both the cell and its translate must lie inside the
/// observable's region.
double covariance_residual(const CovariantObservable& e, const GroupElement& g,
                           const BorelCell& cell);

struct IdentityPair {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_gap(double floor = 1e-300) const {
    return std::abs(lhs - rhs) / std::max(std::abs(rhs), floor);
  }
};

/// Proposition-level translate integral: lhs = quadrature over the window
/// grid of int Tr[E(gB) S] dlambda(g); rhs = lambda~(B). S-independent.
IdentityPair translate_integral_identity(const CovariantObservable& e,
                                         const DensityOperator& s, const BorelCell& cell,
                                         const HaarGrid& window_grid,
                                         double boundary_threshold = 0.05);

/// lhs = || C^{-1} E(B)^{1/2} ||_HS^2, rhs = lambda~(B).
IdentityPair hs_identity(const CovariantObservable& e, const FormalDegree& c,
                         const BorelCell& cell, double domain_tol = 1e-6);

/// lhs = Tr[A(B)] with A(B) = C^{-1} E(B) C^{-1}, rhs = lambda~(B).
IdentityPair trace_identity(const CovariantObservable& e, const FormalDegree& c,
                            const BorelCell& cell);

struct ExtractOptions {
  double max_cell_width0 = 0.5;   // chart units (b or q)
  double max_cell_width1 = 0.35;  // log a or p
  double dispersion_threshold = 5e-2;
};

struct ExtractionResult {
  DensityOperator density;
  double dispersion = 0.0;       // max_B || S_B - S_avg ||_Tr
  double projection_shift = 0.0; // trace distance moved by the PSD re-projection
};

/// Recovers the generating density: per cell S_B = beta(g_B^{-1})(A(B)) /
/// lambda~(B) with g_B the chart centroid, then the lambda~-weighted
/// average, re-projected to the trace-one PSD cone. The dispersion
/// certificate reports max_B || S_B - S_avg ||_Tr; above threshold the
/// observable is rejected as not covariant.
ExtractionResult extract_density(const CovariantObservable& e, const FormalDegree& c,
                                 const Representation& rep,
                                 const ExtractOptions& opt = ExtractOptions{});

/// Quantization map Gamma(f) = sum_B int_B f(g) C beta(g)(S) C dlambda~(g).
/// `bound` must dominate |f| on the region; non-finite samples are
/// rejected. Real nonnegative f yields a PSD operator.
Matrix gamma_map(const CovariantObservable& e,
                 const std::function<Complex(const GroupElement&)>& f, double bound);

/// || sum_B E(B) - I ||_2, optionally restricted to an orthonormal frame.
double normalization_residual(const CovariantObservable& e);
double normalization_residual(const CovariantObservable& e, const Matrix& frame);

/// Manifest describing the observable (partition + metadata); cell
/// operators are serialized separately via matrix_to_json.
nlohmann::json observable_manifest(const CovariantObservable& e);

/// Reads a manifest written by the build tooling together with its cell
/// operator files (paths relative to the manifest) into an external
/// observable.
CovariantObservable load_observable(const std::string& manifest_path);

} // namespace covq

#endif
