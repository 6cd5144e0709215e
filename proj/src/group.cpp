// SPDX-License-Identifier: Apache-2.0

#include "covq/group.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "covq/types.hpp"

namespace covq {

std::string to_string(GroupKind kind) {
  return kind == GroupKind::Affine ? "affine" : "phase_space_r2";
}

double HaarGrid::left_mass() const {
  double s = 0.0;
  for (const auto& n : nodes) s += n.left_weight;
  return s;
}

double HaarGrid::right_mass() const {
  double s = 0.0;
  for (const auto& n : nodes) s += n.right_weight;
  return s;
}

ChartBounds HaarGrid::chart_bounds() const {
  ChartBounds box;
  bool first = true;
  for (const auto& n : nodes) {
    const double c0 = n.g.x;
    const double c1 = kind == GroupKind::Affine ? std::log(n.g.y) : n.g.y;
    if (first) {
      box = ChartBounds{c0, c0, c1, c1};
      first = false;
    } else {
      box.lo0 = std::min(box.lo0, c0);
      box.hi0 = std::max(box.hi0, c0);
      box.lo1 = std::min(box.lo1, c1);
      box.hi1 = std::max(box.hi1, c1);
    }
  }
  return box;
}

BorelCell ChartRegion::to_cell(GroupKind kind) const {
  if (kind == GroupKind::Affine) {
    return BorelCell{lo0, hi0, std::exp(lo1), std::exp(hi1)};
  }
  return BorelCell{lo0, hi0, lo1, hi1};
}

Group::Group(GroupKind kind, int max_quad_order)
    : kind_(kind), max_quad_order_(max_quad_order) {
  if (max_quad_order_ < 1) throw std::invalid_argument("max_quad_order must be >= 1");
}

GroupElement Group::element(double x, double y) const {
  if (!std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("group element coordinates must be finite");
  if (kind_ == GroupKind::Affine && y <= 0.0)
    throw std::invalid_argument("affine dilation must satisfy a > 0");
  return GroupElement{x, y};
}

GroupElement Group::identity() const {
  return kind_ == GroupKind::Affine ? GroupElement{0.0, 1.0} : GroupElement{0.0, 0.0};
}

GroupElement Group::compose(const GroupElement& g, const GroupElement& h) const {
  if (kind_ == GroupKind::Affine) {
    return GroupElement{g.x + g.y * h.x, g.y * h.y};
  }
  return GroupElement{g.x + h.x, g.y + h.y};
}

GroupElement Group::inverse(const GroupElement& g) const {
  if (kind_ == GroupKind::Affine) {
    return GroupElement{-g.x / g.y, 1.0 / g.y};
  }
  return GroupElement{-g.x, -g.y};
}

double Group::modular_delta(const GroupElement& g) const {
  return kind_ == GroupKind::Affine ? 1.0 / g.y : 1.0;
}

double Group::left_haar_density(const GroupElement& g) const {
  return kind_ == GroupKind::Affine ? 1.0 / (g.y * g.y) : 1.0;
}

void Group::validate_cell(const BorelCell& cell) const {
  if (!(std::isfinite(cell.lo0) && std::isfinite(cell.hi0) &&
        std::isfinite(cell.lo1) && std::isfinite(cell.hi1)))
    throw std::invalid_argument("cell bounds must be finite");
  if (cell.hi0 < cell.lo0 || cell.hi1 < cell.lo1)
    throw std::invalid_argument("cell bounds must be ordered");
  if (kind_ == GroupKind::Affine && cell.lo1 <= 0.0)
    throw std::invalid_argument("affine cell must satisfy 0 < a0 <= a1");
}

double Group::cell_measure(const BorelCell& cell, MeasureSide side) const {
  validate_cell(cell);
  if (cell.degenerate()) return 0.0;
  const double w = cell.width0();
  if (kind_ == GroupKind::Affine) {
    if (side == MeasureSide::Left) return w * (1.0 / cell.lo1 - 1.0 / cell.hi1);
    return w * std::log(cell.hi1 / cell.lo1);
  }
  return w * cell.width1();
}

BorelCell Group::translate_cell(const GroupElement& g, const BorelCell& cell) const {
  validate_cell(cell);
  if (kind_ == GroupKind::Affine) {
    return BorelCell{g.x + g.y * cell.lo0, g.x + g.y * cell.hi0,
                     g.y * cell.lo1, g.y * cell.hi1};
  }
  return BorelCell{cell.lo0 + g.x, cell.hi0 + g.x, cell.lo1 + g.y, cell.hi1 + g.y};
}

bool Group::cell_contains(const BorelCell& cell, const GroupElement& g) const {
  return g.x >= cell.lo0 && g.x <= cell.hi0 && g.y >= cell.lo1 && g.y <= cell.hi1;
}

namespace {

// Nodes/weights on [0, 1].
void axis_rule(QuadratureRule rule, int order,
               std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(order);
  weights.resize(order);
  if (rule == QuadratureRule::Midpoint) {
    const double h = 1.0 / order;
    for (int i = 0; i < order; ++i) {
      nodes[i] = (i + 0.5) * h;
      weights[i] = h;
    }
    return;
  }
  std::vector<double> xs, ws;
  gauss_legendre(order, xs, ws);
  for (int i = 0; i < order; ++i) {
    nodes[i] = 0.5 * (xs[i] + 1.0);
    weights[i] = 0.5 * ws[i];
  }
}

} // namespace

HaarGrid Group::build_grid(const BorelCell& cell, int order, QuadratureRule rule) const {
  validate_cell(cell);
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  if (order > max_quad_order_)
    throw std::invalid_argument("quadrature order exceeds configured maximum");

  HaarGrid grid;
  grid.kind = kind_;
  grid.order = order;
  grid.rule = rule;
  if (cell.degenerate()) return grid;

  std::vector<double> n0, w0, n1, w1;
  axis_rule(rule, order, n0, w0);
  axis_rule(rule, order, n1, w1);

  grid.nodes.reserve(static_cast<std::size_t>(order) * order);
  if (kind_ == GroupKind::Affine) {
    // Work in (b, u = log a); left measure is db du e^{-u}, right is db du.
    const double u0 = std::log(cell.lo1), u1 = std::log(cell.hi1);
    const double wb = cell.width0(), wu = u1 - u0;
    for (int i = 0; i < order; ++i) {
      const double b = cell.lo0 + n0[i] * wb;
      for (int j = 0; j < order; ++j) {
        const double u = u0 + n1[j] * wu;
        const double base = w0[i] * wb * w1[j] * wu;
        grid.nodes.push_back(
            GridNode{GroupElement{b, std::exp(u)}, base * std::exp(-u), base});
      }
    }
  } else {
    for (int i = 0; i < order; ++i) {
      const double q = cell.lo0 + n0[i] * cell.width0();
      for (int j = 0; j < order; ++j) {
        const double p = cell.lo1 + n1[j] * cell.width1();
        const double w = w0[i] * cell.width0() * w1[j] * cell.width1();
        grid.nodes.push_back(GridNode{GroupElement{q, p}, w, w});
      }
    }
  }
  return grid;
}

HaarGrid Group::build_region_grid(const ChartRegion& region, int panels0, int panels1,
                                  int order, QuadratureRule rule) const {
  if (panels0 < 1 || panels1 < 1)
    throw std::invalid_argument("panel counts must be >= 1");
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  if (order > max_quad_order_)
    throw std::invalid_argument("quadrature order exceeds configured maximum");

  HaarGrid grid;
  grid.kind = kind_;
  grid.order = order;
  grid.rule = rule;

  std::vector<double> n0, w0, n1, w1;
  axis_rule(rule, order, n0, w0);
  axis_rule(rule, order, n1, w1);

  const double h0 = (region.hi0 - region.lo0) / panels0;
  const double h1 = (region.hi1 - region.lo1) / panels1;
  grid.nodes.reserve(static_cast<std::size_t>(panels0) * panels1 * order * order);
  for (int p0 = 0; p0 < panels0; ++p0) {
    for (int i = 0; i < order; ++i) {
      const double c0 = region.lo0 + (p0 + n0[i]) * h0;
      const double wc0 = w0[i] * h0;
      for (int p1 = 0; p1 < panels1; ++p1) {
        for (int j = 0; j < order; ++j) {
          const double c1 = region.lo1 + (p1 + n1[j]) * h1;
          const double base = wc0 * w1[j] * h1;
          if (kind_ == GroupKind::Affine) {
            grid.nodes.push_back(GridNode{GroupElement{c0, std::exp(c1)},
                                          base * std::exp(-c1), base});
          } else {
            grid.nodes.push_back(GridNode{GroupElement{c0, c1}, base, base});
          }
        }
      }
    }
  }
  return grid;
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  if (order < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
  nodes.resize(order);
  weights.resize(order);
  const int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = order * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[order - 1 - i] = w;
  }
  return;
}

} // namespace covq
