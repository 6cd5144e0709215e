// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_GROUP_HPP
#define COVQ_GROUP_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace covq {

enum class GroupKind {
  Affine,       // (b, a) with a > 0, (b,a)(b',a') = (b + a b', a a')
  PhaseSpaceR2  // (q, p) under addition
};

std::string to_string(GroupKind kind);

/// Point in the global coordinate chart of the group.
/// Affine chart: x = translation b, y = dilation a (a > 0 strictly).
/// Phase-space chart: x = q, y = p.
struct GroupElement {
  double x = 0.0;
  double y = 0.0;
};

enum class MeasureSide { Left, Right };

/// Chart rectangle [lo0, hi0] x [lo1, hi1] interpreted as a Borel subset.
/// For the affine group the second axis is the dilation and must satisfy
/// 0 < lo1 <= hi1. Degenerate (zero-width) cells are legal and have zero
/// measure.
struct BorelCell {
  double lo0 = 0.0;
  double hi0 = 0.0;
  double lo1 = 0.0;
  double hi1 = 0.0;

  double width0() const { return hi0 - lo0; }
  double width1() const { return hi1 - lo1; }
  bool degenerate() const { return width0() <= 0.0 || width1() <= 0.0; }
};

struct GridNode {
  GroupElement g;
  double left_weight = 0.0;   // quadrature weight for the left Haar measure
  double right_weight = 0.0;  // weight for the right Haar measure
};

enum class QuadratureRule { Midpoint, GaussLegendre };

/// Bounding box of node chart coordinates (axis 1 is log a for affine).
struct ChartBounds {
  double lo0 = 0.0, hi0 = 0.0, lo1 = 0.0, hi1 = 0.0;
};

/// Weighted sample of a chart region. Nodes carry both Haar weights;
/// right_weight == left_weight / Delta(g) node by node.
struct HaarGrid {
  GroupKind kind = GroupKind::Affine;
  std::vector<GridNode> nodes;
  int order = 0;
  QuadratureRule rule = QuadratureRule::Midpoint;

  double left_mass() const;
  double right_mass() const;
  ChartBounds chart_bounds() const;
};

/// Rectangular chart region of the group, bounds on (b, log a) for the
/// affine group and on (q, p) for phase space.
struct ChartRegion {
  double lo0 = 0.0;
  double hi0 = 0.0;
  double lo1 = 0.0;  // affine: log a bounds
  double hi1 = 0.0;

  BorelCell to_cell(GroupKind kind) const;
};

/// Group law, Haar measures and modular function of the concrete groups.
/// All operations are pure; elements and cells are validated on entry.
class Group {
 public:
  explicit Group(GroupKind kind, int max_quad_order = 64);

  GroupKind kind() const { return kind_; }

  GroupElement element(double x, double y) const;  // validates chart invariants
  GroupElement identity() const;
  GroupElement compose(const GroupElement& g, const GroupElement& h) const;
  GroupElement inverse(const GroupElement& g) const;

  /// Modular function; affine Delta(b, a) = 1/a under left Haar db da / a^2.
  double modular_delta(const GroupElement& g) const;

  /// Density of the left Haar measure w.r.t. chart Lebesgue measure.
  double left_haar_density(const GroupElement& g) const;

  /// Closed-form Haar measure of a chart rectangle.
  double cell_measure(const BorelCell& cell, MeasureSide side) const;

  /// The set g.B; a left translate of a chart rectangle is again one.
  BorelCell translate_cell(const GroupElement& g, const BorelCell& cell) const;

  bool cell_contains(const BorelCell& cell, const GroupElement& g) const;
  void validate_cell(const BorelCell& cell) const;

  /// Tensor-product quadrature over one cell with `order` nodes per axis.
  /// The affine dilation axis is sampled uniformly in log a.
  HaarGrid build_grid(const BorelCell& cell, int order,
                      QuadratureRule rule = QuadratureRule::Midpoint) const;

  /// Composite rule over a region: panels0 x panels1 panels, `order` nodes
  /// per axis per panel. Axis 1 is log a for the affine group.
  HaarGrid build_region_grid(const ChartRegion& region, int panels0, int panels1,
                             int order,
                             QuadratureRule rule = QuadratureRule::GaussLegendre) const;

  int max_quad_order() const { return max_quad_order_; }

 private:
  GroupKind kind_;
  int max_quad_order_;
};

/// Nodes/weights of the `order`-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace covq

#endif
