// SPDX-License-Identifier: Apache-2.0

#include "covq/povm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "covq/errors.hpp"
#include "covq/parallel.hpp"

namespace covq {

std::vector<BorelCell> make_partition(GroupKind kind, const ChartRegion& region,
                                      int n0, int n1) {
  if (n0 < 1 || n1 < 1) throw std::invalid_argument("partition needs n0, n1 >= 1");
  const double h0 = (region.hi0 - region.lo0) / n0;
  const double h1 = (region.hi1 - region.lo1) / n1;
  if (!(h0 > 0.0 && h1 > 0.0)) throw std::invalid_argument("degenerate partition region");
  std::vector<BorelCell> cells;
  cells.reserve(static_cast<std::size_t>(n0) * n1);
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      const double a0 = region.lo0 + i * h0;
      const double b0 = region.lo1 + j * h1;
      if (kind == GroupKind::Affine) {
        cells.push_back(BorelCell{a0, a0 + h0, std::exp(b0), std::exp(b0 + h1)});
      } else {
        cells.push_back(BorelCell{a0, a0 + h0, b0, b0 + h1});
      }
    }
  }
  return cells;
}

namespace {

double cell_width1_chart(GroupKind kind, const BorelCell& cell) {
  return kind == GroupKind::Affine ? std::log(cell.hi1 / cell.lo1)
                                   : cell.hi1 - cell.lo1;
}

GroupElement cell_centroid(GroupKind kind, const BorelCell& cell) {
  const double c0 = 0.5 * (cell.lo0 + cell.hi0);
  if (kind == GroupKind::Affine)
    return GroupElement{c0, std::exp(0.5 * (std::log(cell.lo1) + std::log(cell.hi1)))};
  return GroupElement{c0, 0.5 * (cell.lo1 + cell.hi1)};
}

bool cells_overlap(GroupKind kind, const BorelCell& a, const BorelCell& b) {
  const double eps0 = 1e-12 * (1.0 + std::abs(a.hi0) + std::abs(b.hi0));
  const double o0 = std::min(a.hi0, b.hi0) - std::max(a.lo0, b.lo0);
  if (o0 <= eps0) return false;
  if (kind == GroupKind::Affine) {
    const double lo = std::max(std::log(a.lo1), std::log(b.lo1));
    const double hi = std::min(std::log(a.hi1), std::log(b.hi1));
    return hi - lo > 1e-12;
  }
  const double o1 = std::min(a.hi1, b.hi1) - std::max(a.lo1, b.lo1);
  return o1 > 1e-12 * (1.0 + std::abs(a.hi1) + std::abs(b.hi1));
}

bool same_cell(const BorelCell& a, const BorelCell& b) {
  const double tol = 1e-11 * (1.0 + std::abs(a.hi0) + std::abs(a.hi1));
  return std::abs(a.lo0 - b.lo0) < tol && std::abs(a.hi0 - b.hi0) < tol &&
         std::abs(a.lo1 - b.lo1) < tol && std::abs(a.hi1 - b.hi1) < tol;
}

ChartRegion bounding_region(GroupKind kind, const std::vector<BorelCell>& cells) {
  ChartRegion r;
  bool first = true;
  for (const auto& c : cells) {
    const double lo1 = kind == GroupKind::Affine ? std::log(c.lo1) : c.lo1;
    const double hi1 = kind == GroupKind::Affine ? std::log(c.hi1) : c.hi1;
    if (first) {
      r = ChartRegion{c.lo0, c.hi0, lo1, hi1};
      first = false;
    } else {
      r.lo0 = std::min(r.lo0, c.lo0);
      r.hi0 = std::max(r.hi0, c.hi0);
      r.lo1 = std::min(r.lo1, lo1);
      r.hi1 = std::max(r.hi1, hi1);
    }
  }
  return r;
}

bool cell_in_region(GroupKind kind, const ChartRegion& r, const BorelCell& c) {
  const double lo1 = kind == GroupKind::Affine ? std::log(c.lo1) : c.lo1;
  const double hi1 = kind == GroupKind::Affine ? std::log(c.hi1) : c.hi1;
  const double slack = 1e-9;
  return c.lo0 >= r.lo0 - slack && c.hi0 <= r.hi0 + slack && lo1 >= r.lo1 - slack &&
         hi1 <= r.hi1 + slack;
}

} // namespace

struct CovariantObservable::Provenance {
  Representation rep;
  FormalDegree degree;
  DensityOperator generator;
  std::vector<DensityOperator::Factor> factors;
  BuildOptions opt;
};

const Representation& CovariantObservable::rep() const {
  if (!provenance_) throw std::logic_error("observable has no provenance");
  return provenance_->rep;
}

const FormalDegree& CovariantObservable::degree() const {
  if (!provenance_) throw std::logic_error("observable has no provenance");
  return provenance_->degree;
}

const DensityOperator& CovariantObservable::generator() const {
  if (!provenance_) throw std::logic_error("observable has no provenance");
  return provenance_->generator;
}

Matrix CovariantObservable::evaluate_cell(const BorelCell& cell) const {
  if (!provenance_) throw std::logic_error("observable has no evaluator (external)");
  const auto& p = *provenance_;
  Group group(kind_);
  group.validate_cell(cell);
  const int n = p.rep.dim();
  if (cell.degenerate()) return Matrix::Zero(n, n);
  const HaarGrid grid = group.build_grid(cell, p.opt.quad_order, p.opt.rule);
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& node : grid.nodes) {
    for (const auto& fac : p.factors) {
      Vector y = p.degree.apply_c(p.rep.apply(node.g, fac.vec));
      acc.noalias() += (node.right_weight * fac.weight) * (y * y.adjoint());
    }
  }
  return hermitize(acc);
}

Matrix CovariantObservable::cell_operator(const BorelCell& cell) const {
  for (std::size_t i = 0; i < partition_.size(); ++i)
    if (same_cell(partition_[i], cell)) return cell_ops_[i];
  return evaluate_cell(cell);
}

Matrix CovariantObservable::total() const {
  if (cell_ops_.empty()) throw std::logic_error("empty observable");
  Matrix sum = Matrix::Zero(cell_ops_[0].rows(), cell_ops_[0].cols());
  for (const auto& op : cell_ops_) sum += op;
  return sum;
}

CovariantObservable CovariantObservable::build(const DensityOperator& s,
                                               const FormalDegree& c,
                                               const Representation& rep,
                                               const std::vector<BorelCell>& partition,
                                               const BuildOptions& opt) {
  if (partition.empty()) throw std::invalid_argument("empty partition");
  if (s.dim() != rep.dim() || c.dim() != rep.dim())
    throw std::invalid_argument("dimension mismatch");
  if (opt.quad_order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  Group group(rep.group_kind());
  for (const auto& cell : partition) group.validate_cell(cell);
  for (std::size_t i = 0; i < partition.size(); ++i)
    for (std::size_t j = i + 1; j < partition.size(); ++j)
      if (cells_overlap(rep.group_kind(), partition[i], partition[j]))
        throw std::invalid_argument("partition cells are not disjoint");

  CovariantObservable out;
  out.kind_ = rep.group_kind();
  out.partition_ = partition;
  out.region_ = bounding_region(out.kind_, partition);
  out.broken_cell_ = opt.broken_cell;

  auto prov = std::make_shared<Provenance>(
      Provenance{rep, c, s, s.factors(1e-12), opt});
  out.provenance_ = prov;

  // Negative-control generator: the density conjugated away from S.
  std::vector<DensityOperator::Factor> broken_factors;
  if (opt.broken_cell >= 0) {
    if (opt.broken_cell >= static_cast<int>(partition.size()))
      throw std::invalid_argument("broken cell index out of range");
    GroupElement bg = opt.broken_g.value_or(
        out.kind_ == GroupKind::Affine ? GroupElement{2.0, std::exp(-0.8)}
                                       : GroupElement{2.5, 2.5});
    broken_factors = prov->factors;
    for (auto& fac : broken_factors) fac.vec = rep.apply(bg, fac.vec);
  }

  const int n = rep.dim();
  const std::size_t n_cells = partition.size();
  out.cell_ops_.assign(n_cells, Matrix());
  std::vector<double> min_eigs(n_cells, 0.0);

  parallel_chunks(n_cells, n_cells, [&](std::size_t idx, std::size_t, std::size_t) {
    const auto& cell = partition[idx];
    const auto& factors = (static_cast<int>(idx) == opt.broken_cell) ? broken_factors
                                                                     : prov->factors;
    Matrix acc = Matrix::Zero(n, n);
    if (!cell.degenerate()) {
      const HaarGrid grid = group.build_grid(cell, opt.quad_order, opt.rule);
      for (const auto& node : grid.nodes) {
        for (const auto& fac : factors) {
          Vector y = c.apply_c(rep.apply(node.g, fac.vec));
          acc.noalias() += (node.right_weight * fac.weight) * (y * y.adjoint());
        }
      }
    }
    acc = hermitize(acc);
    min_eigs[idx] = acc.size() == 0 ? 0.0 : min_eigenvalue(acc);
    out.cell_ops_[idx] = std::move(acc);
  });

  out.min_cell_eig_ = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    out.min_cell_eig_ = std::min(out.min_cell_eig_, min_eigs[i]);
    const double scale = std::max(out.cell_ops_[i].norm(), 1e-300);
    if (min_eigs[i] < -opt.psd_tol * scale)
      out.warnings_.push_back("cell " + std::to_string(i) +
                              ": negative eigenvalue beyond tolerance");
  }
  return out;
}

CovariantObservable CovariantObservable::external(GroupKind kind,
                                                  std::vector<BorelCell> partition,
                                                  std::vector<Matrix> cell_ops) {
  if (partition.size() != cell_ops.size() || partition.empty())
    throw std::invalid_argument("partition/operator count mismatch");
  CovariantObservable out;
  out.kind_ = kind;
  out.region_ = bounding_region(kind, partition);
  out.partition_ = std::move(partition);
  out.cell_ops_ = std::move(cell_ops);
  out.min_cell_eig_ = 0.0;
  for (const auto& op : out.cell_ops_)
    out.min_cell_eig_ = std::min(out.min_cell_eig_, min_eigenvalue(op));
  return out;
}

double covariance_residual(const CovariantObservable& e, const GroupElement& g,
                           const BorelCell& cell) {
  const Representation& rep = e.rep();
  Group group(e.kind());
  const BorelCell translated = group.translate_cell(group.inverse(g), cell);
  if (!cell_in_region(e.kind(), e.region(), cell) ||
      !cell_in_region(e.kind(), e.region(), translated))
    throw std::invalid_argument("cell or its translate leaves the partitioned region");
  const Matrix lhs = rep.beta_adjoint(g, e.cell_operator(cell));
  const Matrix rhs = e.evaluate_cell(translated);
  return operator_norm(lhs - rhs);
}

IdentityPair translate_integral_identity(const CovariantObservable& e,
                                         const DensityOperator& s, const BorelCell& cell,
                                         const HaarGrid& window_grid,
                                         double boundary_threshold) {
  const Representation& rep = e.rep();
  const FormalDegree& deg = e.degree();
  Group group(e.kind());
  group.validate_cell(cell);

  const auto s_factors = s.factors(1e-12);
  std::vector<Vector> c_vecs;
  for (const auto& f : s_factors) c_vecs.push_back(deg.apply_c(f.vec));

  const auto gen = e.generator().factors(1e-12);
  const int cell_order = 4;

  const std::size_t nn = window_grid.nodes.size();
  const ChartBounds box = window_grid.chart_bounds();
  const std::size_t n_chunks = 64;
  std::vector<double> part_total(n_chunks, 0.0), part_boundary(n_chunks, 0.0);

  parallel_chunks(nn, n_chunks, [&](std::size_t ci, std::size_t lo, std::size_t hi) {
    double total = 0.0, boundary = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& node = window_grid.nodes[i];
      const BorelCell moved = group.translate_cell(node.g, cell);
      const HaarGrid cg = group.build_grid(moved, cell_order, QuadratureRule::Midpoint);
      double tr = 0.0;
      for (const auto& cn : cg.nodes) {
        for (const auto& gf : gen) {
          const Vector u = rep.apply(cn.g, gf.vec);
          for (std::size_t m = 0; m < c_vecs.size(); ++m)
            tr += cn.right_weight * gf.weight * s_factors[m].weight *
                  std::norm(c_vecs[m].dot(u));
        }
      }
      const double contrib = node.left_weight * tr;
      total += contrib;
      if (in_chart_boundary_band(window_grid.kind, box, node, 0.05)) boundary += contrib;
    }
    part_total[ci] = total;
    part_boundary[ci] = boundary;
  });

  double total = 0.0, boundary = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    total += part_total[c];
    boundary += part_boundary[c];
  }
  if (total > 0.0 && boundary / total > boundary_threshold &&
      !covers_weyl_torus(rep, box))
    throw TruncationDominatedError("translate_integral_identity: truncation dominated");

  IdentityPair pair;
  pair.lhs = total;
  pair.rhs = group.cell_measure(cell, MeasureSide::Right);
  return pair;
}

IdentityPair hs_identity(const CovariantObservable& e, const FormalDegree& c,
                         const BorelCell& cell, double domain_tol) {
  Group group(e.kind());
  IdentityPair pair;
  pair.rhs = group.cell_measure(cell, MeasureSide::Right);
  if (cell.degenerate()) return pair;
  const Matrix root = psd_sqrt(e.cell_operator(cell));
  const double outside = c.outside_domain_fraction(root);
  if (outside > domain_tol)
    throw OutsideDomainError("hs_identity: E(B)^{1/2} has floored spectral mass " +
                             std::to_string(outside));
  pair.lhs = c.apply_c_inverse(root).squaredNorm();
  return pair;
}

IdentityPair trace_identity(const CovariantObservable& e, const FormalDegree& c,
                            const BorelCell& cell) {
  Group group(e.kind());
  IdentityPair pair;
  pair.rhs = group.cell_measure(cell, MeasureSide::Right);
  if (cell.degenerate()) return pair;
  pair.lhs = trace(c.conjugate_c_inverse(e.cell_operator(cell))).real();
  return pair;
}

ExtractionResult extract_density(const CovariantObservable& e, const FormalDegree& c,
                                 const Representation& rep, const ExtractOptions& opt) {
  Group group(e.kind());
  const auto& cells = e.partition();
  for (const auto& cell : cells) {
    if (cell.width0() > opt.max_cell_width0 ||
        cell_width1_chart(e.kind(), cell) > opt.max_cell_width1)
      throw std::invalid_argument("cells too coarse for density extraction");
  }

  const int n = static_cast<int>(e.cell_operators()[0].rows());
  const std::size_t n_cells = cells.size();
  std::vector<Matrix> cell_density(n_cells);
  std::vector<double> weights(n_cells, 0.0);

  parallel_chunks(n_cells, n_cells, [&](std::size_t idx, std::size_t, std::size_t) {
    const auto& cell = cells[idx];
    const double w = group.cell_measure(cell, MeasureSide::Right);
    weights[idx] = w;
    if (!(w > 0.0)) {
      cell_density[idx] = Matrix::Zero(n, n);
      return;
    }
    const Matrix a = c.conjugate_c_inverse(e.cell_operators()[idx]);
    cell_density[idx] = rep.beta_adjoint(cell_centroid(e.kind(), cell), a) / w;
  });

  Matrix avg = Matrix::Zero(n, n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    avg += weights[i] * cell_density[i];
    wsum += weights[i];
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("partition has zero right measure");
  avg /= wsum;

  std::vector<double> dispersions(n_cells, 0.0);
  parallel_chunks(n_cells, n_cells, [&](std::size_t idx, std::size_t, std::size_t) {
    if (weights[idx] > 0.0)
      dispersions[idx] = trace_norm_hermitian(cell_density[idx] - avg);
  });

  ExtractionResult res{DensityOperator::project(avg), 0.0, 0.0};
  for (double d : dispersions) res.dispersion = std::max(res.dispersion, d);
  if (res.dispersion > opt.dispersion_threshold)
    throw NotCovariantError("extracted cell densities disagree (dispersion " +
                            std::to_string(res.dispersion) + "); observable is not covariant");
  res.projection_shift = 0.5 * trace_norm_hermitian(res.density.matrix() - avg);
  return res;
}

Matrix gamma_map(const CovariantObservable& e,
                 const std::function<Complex(const GroupElement&)>& f, double bound) {
  if (!e.has_provenance()) throw std::logic_error("gamma_map needs a constructed observable");
  if (!(bound >= 0.0) || !std::isfinite(bound))
    throw std::invalid_argument("gamma_map: bound must be finite");
  const Representation& rep = e.rep();
  const FormalDegree& deg = e.degree();
  Group group(e.kind());
  const auto factors = e.generator().factors(1e-12);
  const int n = rep.dim();

  const auto& cells = e.partition();
  std::vector<Matrix> partial(cells.size());
  std::vector<int> real_flags(cells.size(), 1);
  std::vector<int> bad_flags(cells.size(), 0);

  parallel_chunks(cells.size(), cells.size(), [&](std::size_t idx, std::size_t, std::size_t) {
    Matrix acc = Matrix::Zero(n, n);
    const auto& cell = cells[idx];
    if (!cell.degenerate()) {
      const HaarGrid grid = group.build_grid(cell, 4, QuadratureRule::Midpoint);
      for (const auto& node : grid.nodes) {
        const Complex fv = f(node.g);
        if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag()) ||
            std::abs(fv) > bound * (1.0 + 1e-12)) {
          bad_flags[idx] = 1;
          break;
        }
        if (std::abs(fv.imag()) > 1e-14 * (1.0 + std::abs(fv.real())))
          real_flags[idx] = 0;
        for (const auto& fac : factors) {
          Vector y = deg.apply_c(rep.apply(node.g, fac.vec));
          acc.noalias() += (node.right_weight * fac.weight * fv) * (y * y.adjoint());
        }
      }
    }
    partial[idx] = std::move(acc);
  });

  Matrix sum = Matrix::Zero(n, n);
  bool all_real = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (bad_flags[i])
      throw std::invalid_argument("gamma_map: sample outside declared bound");
    sum += partial[i];
    all_real = all_real && real_flags[i] == 1;
  }
  return all_real ? hermitize(sum) : sum;
}

double normalization_residual(const CovariantObservable& e) {
  const Matrix t = e.total();
  return operator_norm(t - Matrix::Identity(t.rows(), t.cols()));
}

double normalization_residual(const CovariantObservable& e, const Matrix& frame) {
  const Matrix t = e.total();
  const Matrix sub = frame.adjoint() * t * frame;
  return operator_norm(sub - Matrix::Identity(frame.cols(), frame.cols()));
}

CovariantObservable load_observable(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::invalid_argument("cannot open manifest: " + manifest_path);
  nlohmann::json j;
  in >> j;
  const std::string kind_name = j.at("group").get<std::string>();
  GroupKind kind;
  if (kind_name == "affine")
    kind = GroupKind::Affine;
  else if (kind_name == "phase_space_r2")
    kind = GroupKind::PhaseSpaceR2;
  else
    throw std::invalid_argument("manifest: unknown group " + kind_name);

  std::vector<BorelCell> cells;
  for (const auto& c : j.at("partition"))
    cells.push_back(BorelCell{c.at(0).get<double>(), c.at(1).get<double>(),
                              c.at(2).get<double>(), c.at(3).get<double>()});

  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::vector<Matrix> ops;
  for (const auto& f : j.at("cell_files")) {
    std::ifstream cf(base / f.get<std::string>());
    if (!cf) throw std::invalid_argument("manifest: missing cell file " + f.get<std::string>());
    nlohmann::json cj;
    cf >> cj;
    ops.push_back(matrix_from_json(cj));
  }
  return CovariantObservable::external(kind, std::move(cells), std::move(ops));
}

nlohmann::json observable_manifest(const CovariantObservable& e) {
  nlohmann::json j;
  j["group"] = to_string(e.kind());
  j["n_cells"] = e.partition().size();
  j["dim"] = e.cell_operators().empty() ? 0 : e.cell_operators()[0].rows();
  j["provenance"] = e.has_provenance() ? "constructed" : "external";
  if (e.broken_cell() >= 0) j["broken_cell"] = e.broken_cell();
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : e.partition())
    cells.push_back(nlohmann::json::array({c.lo0, c.hi0, c.lo1, c.hi1}));
  j["partition"] = std::move(cells);
  j["region"] = {{"lo0", e.region().lo0},
                 {"hi0", e.region().hi0},
                 {"lo1", e.region().lo1},
                 {"hi1", e.region().hi1}};
  return j;
}

} // namespace covq
