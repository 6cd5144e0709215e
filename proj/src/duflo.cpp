// SPDX-License-Identifier: Apache-2.0

#include "covq/duflo.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "covq/errors.hpp"
#include "covq/parallel.hpp"

namespace covq {

// Pinned against estimate_degree on the default admissible bump (see
// test_duflo); continuum value for left Haar db da / a^2 is 2 pi.
const double kAffineKappa = 6.283185307179586;

// Exact on the discrete torus: int U T U* dq dp = 2 pi Tr[T] I.
const double kWeylFormalConstant = 6.283185307179586;

FormalDegree::FormalDegree(Matrix basis, RealVector c_values, double floor_rel)
    : basis_(std::move(basis)), cvals_(std::move(c_values)) {
  if (basis_.cols() != cvals_.size())
    throw std::invalid_argument("formal degree: basis/eigenvalue size mismatch");
  if (basis_.cols() < 1 || basis_.rows() < basis_.cols())
    throw std::invalid_argument("formal degree: bad basis shape");
  double cmax = 0.0;
  for (Eigen::Index i = 0; i < cvals_.size(); ++i) {
    if (!(cvals_(i) > 0.0))
      throw std::invalid_argument("formal degree: eigenvalues must be strictly positive");
    cmax = std::max(cmax, cvals_(i));
  }
  floor_abs_ = floor_rel * cmax;
  cinv_.resize(cvals_.size());
  for (Eigen::Index i = 0; i < cvals_.size(); ++i)
    cinv_(i) = cvals_(i) >= floor_abs_ ? 1.0 / cvals_(i) : 0.0;
  diagonal_ = basis_.rows() == basis_.cols() &&
              (basis_ - Matrix::Identity(basis_.rows(), basis_.cols())).norm() < 1e-14;
}

FormalDegree FormalDegree::diagonal(RealVector c_values, double floor_rel) {
  const Eigen::Index n = c_values.size();
  return FormalDegree(Matrix::Identity(n, n), std::move(c_values), floor_rel);
}

Matrix FormalDegree::c_matrix() const {
  if (diagonal_) return cvals_.cast<Complex>().asDiagonal();
  return basis_ * cvals_.cast<Complex>().asDiagonal() * basis_.adjoint();
}

Matrix FormalDegree::c_inverse_matrix() const {
  if (diagonal_) return cinv_.cast<Complex>().asDiagonal();
  return basis_ * cinv_.cast<Complex>().asDiagonal() * basis_.adjoint();
}

Vector FormalDegree::apply_c(const Vector& v) const {
  if (diagonal_) return cvals_.cast<Complex>().asDiagonal() * v;
  return basis_ * (cvals_.cast<Complex>().asDiagonal() * (basis_.adjoint() * v));
}

Vector FormalDegree::apply_c_inverse(const Vector& v) const {
  if (diagonal_) return cinv_.cast<Complex>().asDiagonal() * v;
  return basis_ * (cinv_.cast<Complex>().asDiagonal() * (basis_.adjoint() * v));
}

Matrix FormalDegree::apply_c(const Matrix& m) const {
  if (diagonal_) return cvals_.cast<Complex>().asDiagonal() * m;
  return basis_ * (cvals_.cast<Complex>().asDiagonal() * (basis_.adjoint() * m));
}

Matrix FormalDegree::apply_c_inverse(const Matrix& m) const {
  if (diagonal_) return cinv_.cast<Complex>().asDiagonal() * m;
  return basis_ * (cinv_.cast<Complex>().asDiagonal() * (basis_.adjoint() * m));
}

Matrix FormalDegree::conjugate_c(const Matrix& m) const {
  const Matrix left_adj = apply_c(m).adjoint();
  return apply_c(left_adj).adjoint();
}

Matrix FormalDegree::conjugate_c_inverse(const Matrix& m) const {
  const Matrix left_adj = apply_c_inverse(m).adjoint();
  return apply_c_inverse(left_adj).adjoint();
}

double FormalDegree::outside_domain_fraction(const Vector& v) const {
  return outside_domain_fraction(Matrix(v));
}

double FormalDegree::outside_domain_fraction(const Matrix& m) const {
  const double total = m.squaredNorm();
  if (!(total > 0.0)) return 0.0;
  const Matrix proj = basis_.adjoint() * m;  // rank x cols
  double inside = 0.0;
  for (Eigen::Index i = 0; i < cvals_.size(); ++i)
    if (cvals_(i) >= floor_abs_) inside += proj.row(i).squaredNorm();
  return std::max(0.0, 1.0 - inside / total);
}

FormalDegree analytic_affine_degree(const Representation& rep, double floor_rel) {
  if (rep.kind() != RepKind::AffineWavelet)
    throw std::invalid_argument("analytic_affine_degree needs the affine wavelet rep");
  const auto& xi = rep.frequencies();
  RealVector c(xi.size());
  for (Eigen::Index k = 0; k < xi.size(); ++k) c(k) = std::sqrt(xi(k) / kAffineKappa);
  return FormalDegree::diagonal(std::move(c), floor_rel);
}

FormalDegree analytic_weyl_degree(const Representation& rep, double floor_rel) {
  if (rep.kind() != RepKind::WeylHeisenberg)
    throw std::invalid_argument("analytic_weyl_degree needs the Weyl rep");
  RealVector c = RealVector::Constant(rep.dim(), 1.0 / std::sqrt(kWeylFormalConstant));
  return FormalDegree::diagonal(std::move(c), floor_rel);
}

double quadratic_form(const Representation& rep, const HaarGrid& grid,
                      const Vector& chi, const Vector& phi) {
  const std::size_t n = grid.nodes.size();
  const std::size_t n_chunks = 64;
  std::vector<double> partial(n_chunks, 0.0);
  parallel_chunks(n, n_chunks, [&](std::size_t c, std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const auto& node = grid.nodes[i];
      const Vector u = rep.apply_adjoint(node.g, chi);
      acc += node.left_weight * std::norm(u.dot(phi));
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / chi.squaredNorm();
}

bool in_chart_boundary_band(GroupKind kind, const ChartBounds& box, const GridNode& node,
                            double band) {
  const double c0 = node.g.x;
  const double c1 = kind == GroupKind::Affine ? std::log(node.g.y) : node.g.y;
  const double w0 = (box.hi0 - box.lo0) * band;
  const double w1 = (box.hi1 - box.lo1) * band;
  return c0 < box.lo0 + w0 || c0 > box.hi0 - w0 || c1 < box.lo1 + w1 || c1 > box.hi1 - w1;
}

bool covers_weyl_torus(const Representation& rep, const ChartBounds& box) {
  if (rep.kind() != RepKind::WeylHeisenberg) return false;
  const double full_q = rep.length();
  const double full_p = 2.0 * rep.momentum_halfwidth();
  return (box.hi0 - box.lo0) >= 0.9 * full_q && (box.hi1 - box.lo1) >= 0.9 * full_p;
}

DegreeEstimate estimate_degree(const Representation& rep, const HaarGrid& grid,
                               const Matrix& probes, const EstimateOptions& opt) {
  if (probes.rows() != rep.dim())
    throw std::invalid_argument("estimate_degree: probe dimension mismatch");
  if (probes.cols() < 1)
    throw std::invalid_argument("estimate_degree: need at least one probe");
  if (grid.nodes.empty()) throw std::invalid_argument("estimate_degree: empty grid");

  Vector chi = opt.s_vector.size() == rep.dim() ? opt.s_vector : rep.reference_state();
  chi /= chi.norm();

  const int m = static_cast<int>(probes.cols());
  const std::size_t n = grid.nodes.size();
  const ChartBounds box = grid.chart_bounds();

  const std::size_t n_chunks = 64;
  std::vector<Matrix> part_b(n_chunks, Matrix::Zero(m, m));
  std::vector<double> part_total(n_chunks, 0.0);
  std::vector<double> part_boundary(n_chunks, 0.0);

  const bool identity_probes =
      probes.rows() == probes.cols() && probes.isIdentity(1e-15);

  parallel_chunks(n, n_chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    // Rows sqrt(w) (P* u_g)^*; the Gram R* R below realizes the 4-term
    // complex polarization of the quadratic form over every probe pair.
    Matrix rows(hi - lo, m);
    double total = 0.0, boundary = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& node = grid.nodes[i];
      const Vector u = rep.apply_adjoint(node.g, chi);
      if (identity_probes)
        rows.row(i - lo) = std::sqrt(node.left_weight) * u.adjoint();
      else
        rows.row(i - lo) = std::sqrt(node.left_weight) * (u.adjoint() * probes);
      const double contrib = rows.row(i - lo).squaredNorm();
      total += contrib;
      if (in_chart_boundary_band(grid.kind, box, node, opt.boundary_band)) boundary += contrib;
    }
    part_b[c].noalias() = rows.adjoint() * rows;
    part_total[c] = total;
    part_boundary[c] = boundary;
  });

  Matrix b = Matrix::Zero(m, m);
  double total = 0.0, boundary = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    b += part_b[c];
    total += part_total[c];
    boundary += part_boundary[c];
  }
  b = 0.5 * (b + b.adjoint()).eval();

  DegreeEstimate out{FormalDegree::diagonal(RealVector::Ones(1)), probes, b,
                     Matrix(), RealVector(), 0.0, {}};
  out.boundary_fraction = total > 0.0 ? boundary / total : 0.0;
  if (out.boundary_fraction > opt.boundary_threshold && !covers_weyl_torus(rep, box))
    throw TruncationDominatedError(
        "estimate_degree: integrand boundary mass fraction " +
        std::to_string(out.boundary_fraction) + " exceeds threshold");

  Eigen::SelfAdjointEigenSolver<Matrix> bes(b, Eigen::EigenvaluesOnly);
  const double bmax = std::max(std::abs(bes.eigenvalues()(m - 1)), 1e-300);
  if (bes.eigenvalues()(0) < -opt.psd_tol * bmax)
    throw std::runtime_error("estimate_degree: estimated quadratic form is not PSD");

  // Compress onto the orthonormalized probe span: Y = S^-1 V* B V S^-1.
  Eigen::JacobiSVD<Matrix> svd(probes, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > sv(0) * 1e-10) ++rank;
  if (rank < 1) throw std::invalid_argument("estimate_degree: probes are degenerate");
  const Matrix v = svd.matrixV().leftCols(rank);
  const Matrix u = svd.matrixU().leftCols(rank);
  RealVector sinv(rank);
  for (int i = 0; i < rank; ++i) sinv(i) = 1.0 / sv(i);
  Matrix y = sinv.cast<Complex>().asDiagonal() * (v.adjoint() * b * v) *
             sinv.cast<Complex>().asDiagonal();
  y = 0.5 * (y + y.adjoint()).eval();
  out.compressed = y;

  Eigen::SelfAdjointEigenSolver<Matrix> yes(y);
  out.spectrum = yes.eigenvalues();

  const double mu_max = std::max(out.spectrum(rank - 1), 1e-300);
  RealVector cvals(rank);
  for (int i = 0; i < rank; ++i) {
    const double mu = std::max(out.spectrum(i), 1e-14 * mu_max);
    cvals(i) = 1.0 / std::sqrt(mu);
  }
  out.degree = FormalDegree(u * yes.eigenvectors(), cvals, opt.floor_rel);
  return out;
}

Matrix default_affine_probes(const Representation& rep, double xi_lo, double xi_hi,
                             double sigma_u, int spacing_nodes) {
  if (rep.kind() != RepKind::AffineWavelet)
    throw std::invalid_argument("affine probes need the affine rep");
  std::vector<Vector> cols;
  const double du = rep.delta_u();
  for (int k = 0; k < rep.dim(); k += spacing_nodes) {
    const double u = rep.u_min() + k * du;
    const double xi = std::exp(u);
    if (xi < xi_lo || xi > xi_hi) continue;
    cols.push_back(rep.log_bump(u, sigma_u));
  }
  if (cols.empty()) throw std::invalid_argument("no probes in requested band");
  Matrix p(rep.dim(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) p.col(c) = cols[c];
  return p;
}

HaarGrid default_estimation_grid(const Representation& rep) {
  Group group(rep.group_kind());
  if (rep.kind() == RepKind::AffineWavelet) {
    const ChartRegion region{-10.0, 10.0, -4.0, 3.5};
    return group.build_region_grid(region, 45, 30, 8, QuadratureRule::GaussLegendre);
  }
  return group.build_region_grid(rep.torus_region(), 256, 256, 1, QuadratureRule::Midpoint);
}

CommutationReport verify_commutation(const Representation& rep, const FormalDegree& deg,
                                     const std::vector<GroupElement>& samples) {
  Group group(rep.group_kind());
  const int n = rep.dim();
  const Matrix c = deg.c_matrix();
  const Matrix cinv = deg.c_inverse_matrix();
  const double norm_c = operator_norm(c);
  const double norm_cinv = operator_norm(cinv);

  CommutationReport report;
  report.rows.reserve(samples.size());
  for (const auto& g : samples) {
    const double root_delta = std::sqrt(group.modular_delta(g));

    Matrix uc(n, n), ucinv(n, n), cu_adj(n, n), cinvu_adj(n, n);
    for (int col = 0; col < n; ++col) {
      uc.col(col) = rep.apply(g, c.col(col));
      ucinv.col(col) = rep.apply(g, cinv.col(col));
      cu_adj.col(col) = rep.apply_adjoint(g, c.col(col));   // (C U)^* column
      cinvu_adj.col(col) = rep.apply_adjoint(g, cinv.col(col));
    }
    const Matrix cu = cu_adj.adjoint();      // C U(g)
    const Matrix cinvu = cinvu_adj.adjoint();

    CommutationRow row;
    row.g = g;
    row.residual_c = operator_norm(uc - cu / root_delta) / norm_c;
    row.residual_cinv = operator_norm(ucinv - root_delta * cinvu) / norm_cinv;
    report.rows.push_back(row);

    report.max_c = std::max(report.max_c, row.residual_c);
    report.max_cinv = std::max(report.max_cinv, row.residual_cinv);
    report.mean_c += row.residual_c;
    report.mean_cinv += row.residual_cinv;
  }
  if (!report.rows.empty()) {
    report.mean_c /= static_cast<double>(report.rows.size());
    report.mean_cinv /= static_cast<double>(report.rows.size());
  }
  return report;
}

OrthogonalityResult orthogonality_identity(const Representation& rep,
                                           const FormalDegree& deg, const HaarGrid& grid,
                                           const Matrix& a_op, const Matrix& s_op,
                                           double boundary_threshold) {
  const int n = rep.dim();
  if (a_op.rows() != n || s_op.rows() != n)
    throw std::invalid_argument("orthogonality_identity: dimension mismatch");
  const double a_scale = std::max(a_op.norm(), 1e-300);
  const double s_scale = std::max(s_op.norm(), 1e-300);
  if (min_eigenvalue(a_op) < -1e-8 * a_scale || min_eigenvalue(s_op) < -1e-8 * s_scale)
    throw std::invalid_argument("orthogonality_identity: operators must be positive");

  // Spectral factors above numerical noise.
  const auto factorize = [](const Matrix& op) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(op));
    std::vector<std::pair<double, Vector>> fac;
    const double cut = std::max(es.eigenvalues().maxCoeff(), 0.0) * 1e-12;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) > cut)
        fac.emplace_back(es.eigenvalues()(i), es.eigenvectors().col(i));
    return fac;
  };
  const auto a_fac = factorize(a_op);
  const auto s_fac = factorize(s_op);

  const std::size_t nn = grid.nodes.size();
  const ChartBounds box = grid.chart_bounds();
  const std::size_t n_chunks = 64;
  std::vector<double> part_total(n_chunks, 0.0), part_boundary(n_chunks, 0.0);

  parallel_chunks(nn, n_chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    double total = 0.0, boundary = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& node = grid.nodes[i];
      double val = 0.0;
      for (const auto& [sw, sv] : s_fac) {
        const Vector us = rep.apply(node.g, sv);
        for (const auto& [aw, av] : a_fac) val += sw * aw * std::norm(av.dot(us));
      }
      const double contrib = node.left_weight * val;
      total += contrib;
      if (in_chart_boundary_band(grid.kind, box, node, 0.05)) boundary += contrib;
    }
    part_total[c] = total;
    part_boundary[c] = boundary;
  });

  OrthogonalityResult res;
  double total = 0.0, boundary = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    total += part_total[c];
    boundary += part_boundary[c];
  }
  res.lhs = total;
  res.boundary_fraction = total > 0.0 ? boundary / total : 0.0;
  if (res.boundary_fraction > boundary_threshold && !covers_weyl_torus(rep, box))
    throw TruncationDominatedError("orthogonality_identity: truncation dominated");

  const Matrix root_s = psd_sqrt(s_op);
  res.outside_domain = deg.outside_domain_fraction(root_s);
  res.rhs = trace(a_op).real() * deg.apply_c_inverse(root_s).squaredNorm();
  return res;
}

WindowSweep domain_window_sweep(const Representation& rep, const Vector& chi,
                                const Vector& phi, const std::vector<double>& halfwidths,
                                double rel_tol) {
  Group group(rep.group_kind());
  WindowSweep sweep;
  for (double t : halfwidths) {
    HaarGrid grid;
    if (rep.kind() == RepKind::AffineWavelet) {
      const ChartRegion region{-t, t, -3.0, 3.0};
      const int panels0 = std::max(8, static_cast<int>(std::ceil(2.0 * t / 0.45)));
      grid = group.build_region_grid(region, panels0, 24, 6, QuadratureRule::GaussLegendre);
    } else {
      const double hp = std::min(t, rep.momentum_halfwidth());
      const double hq = std::min(t, 0.5 * rep.length());
      const ChartRegion region{-hq, hq, -hp, hp};
      const int panels = std::max(16, static_cast<int>(std::ceil(2.0 * hq / rep.dx())));
      grid = group.build_region_grid(region, panels, panels, 1, QuadratureRule::Midpoint);
    }
    sweep.halfwidths.push_back(t);
    sweep.values.push_back(quadratic_form(rep, grid, chi, phi));
  }
  const std::size_t k = sweep.values.size();
  if (k >= 2) {
    const double last = sweep.values[k - 1];
    const double prev = sweep.values[k - 2];
    sweep.saturated = std::abs(last - prev) <= rel_tol * std::max(std::abs(last), 1e-300);
  }
  return sweep;
}

} // namespace covq
