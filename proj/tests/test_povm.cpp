// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "covq/errors.hpp"
#include "covq/povm.hpp"
#include "test_util.hpp"

using namespace covq;

namespace {

struct AffineSetup {
  Representation rep = Representation::affine();
  FormalDegree deg = analytic_affine_degree(rep);
  Group group{GroupKind::Affine};

  DensityOperator bump_density(double u_center = 0.9387, double sigma = 0.45) const {
    return DensityOperator::pure(rep.log_bump(u_center, sigma));
  }
};

struct WeylSetup {
  Representation rep = Representation::weyl(64);
  FormalDegree deg = analytic_weyl_degree(rep);
  Group group{GroupKind::PhaseSpaceR2};

  DensityOperator ground_density() const {
    return DensityOperator::pure(rep.gaussian_state());
  }
};

} // namespace

TEST_SUITE_BEGIN("povm");

TEST_CASE("partitions tile the region disjointly") {
  const auto cells = make_partition(GroupKind::Affine, ChartRegion{-2, 2, -1, 1}, 4, 3);
  CHECK(cells.size() == 12);
  Group group(GroupKind::Affine);
  double mass = 0.0;
  for (const auto& c : cells) mass += group.cell_measure(c, MeasureSide::Right);
  const double expected =
      group.cell_measure(ChartRegion{-2, 2, -1, 1}.to_cell(GroupKind::Affine),
                         MeasureSide::Right);
  CHECK(mass == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("observable construction basics") {
  AffineSetup ax;
  const auto cells = make_partition(GroupKind::Affine, ChartRegion{-3, 3, -0.8, 0.8}, 8, 5);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);

  // Every cell operator is PSD within tolerance and bounded by I.
  CHECK(obs.min_cell_eigenvalue() >= -1e-8);
  test::Rng rng(51);
  for (const auto& op : obs.cell_operators()) {
    const Vector phi = rng.cgauss_vector(ax.rep.dim());
    const double q = (phi.adjoint() * op * phi)(0, 0).real();
    CHECK(q >= -1e-8 * phi.squaredNorm());
    CHECK(q <= phi.squaredNorm() * (1.0 + 1e-8));
  }

  // Degenerate cell evaluates to the zero operator.
  const Matrix zero = obs.evaluate_cell(BorelCell{1.0, 1.0, 1.0, 2.0});
  CHECK(zero.norm() == 0.0);

  // Non-disjoint partitions are rejected.
  auto overlapping = cells;
  overlapping.push_back(cells[3]);
  CHECK_THROWS_AS(
      CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, overlapping),
      std::invalid_argument);
}

TEST_CASE("weyl normalization is exact on the full torus and refines monotonically") {
  WeylSetup wl;
  const auto region = wl.rep.torus_region();
  const auto cells = make_partition(GroupKind::PhaseSpaceR2, region, 16, 16);

  double previous = 1e300;
  for (int order : {1, 2, 4}) {
    BuildOptions opt;
    opt.quad_order = order;
    const auto obs = CovariantObservable::build(wl.ground_density(), wl.deg, wl.rep,
                                                cells, opt);
    const double res = normalization_residual(obs);
    CHECK(res <= previous + 1e-14);
    previous = res;
  }
  CHECK(previous < 1e-10);
}

TEST_CASE("affine normalization approaches identity on the faithful band") {
  AffineSetup ax;
  const Matrix frame = ax.rep.band_frame(1.7, 5.0, 0.35);
  REQUIRE(frame.cols() >= 4);

  double previous = 1e300;
  double finest = 0.0;
  struct Step {
    double b;
    int n0;
    int order;
  };
  for (const Step& step : {Step{4.0, 10, 3}, Step{8.0, 20, 4}, Step{16.0, 40, 5}}) {
    const auto cells = make_partition(GroupKind::Affine,
                                      ChartRegion{-step.b, step.b, -3.0, 3.0}, step.n0, 12);
    BuildOptions opt;
    opt.quad_order = step.order;
    const auto obs =
        CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells, opt);
    finest = normalization_residual(obs, frame);
    CHECK(finest <= previous + 1e-14);
    previous = finest;
  }
  CHECK(finest <= 1e-2);
}

TEST_CASE("covariance of constructed observables") {
  AffineSetup ax;
  const auto cells =
      make_partition(GroupKind::Affine, ChartRegion{-4, 4, -0.9, 0.9}, 16, 6);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);

  // g = e: exact zero.
  const BorelCell inner{-0.5, 0.5, std::exp(-0.15), std::exp(0.15)};
  CHECK(covariance_residual(obs, ax.group.identity(), inner) <= 1e-13);

  // Random continuous g with the cell and its translate inside the region.
  test::Rng rng(52);
  int checked = 0;
  while (checked < 12) {
    const GroupElement g{rng.uniform(-0.6, 0.6), std::exp(rng.uniform(-0.25, 0.25))};
    const BorelCell cell{rng.uniform(-2.0, 0.5), 0.0, std::exp(rng.uniform(-0.5, 0.0)), 0.0};
    BorelCell c = cell;
    c.hi0 = c.lo0 + rng.uniform(0.3, 1.0);
    c.hi1 = c.lo1 * std::exp(rng.uniform(0.1, 0.4));
    const auto moved = ax.group.translate_cell(ax.group.inverse(g), c);
    if (std::log(moved.lo1) < -0.9 || std::log(moved.hi1) > 0.9 || moved.lo0 < -4 ||
        moved.hi0 > 4)
      continue;
    CHECK(covariance_residual(obs, g, c) <= 5e-3);
    ++checked;
  }

  // Precondition: translate that leaves the region is rejected.
  CHECK_THROWS_AS(covariance_residual(obs, GroupElement{9.0, 1.0}, inner),
                  std::invalid_argument);

  // Negative control: conjugated density on one cell shows up loudly.
  BuildOptions broken;
  broken.broken_cell = 49;  // b in [0, 0.5], log a in [-0.6, -0.3]: heavy C weight
  const auto bad =
      CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells, broken);
  const auto& bc = bad.partition()[49];
  const GroupElement small{0.1, std::exp(0.05)};
  const double broken_res = covariance_residual(bad, small, bc);
  CHECK(broken_res > 10.0 * 5e-3);
}

TEST_CASE("weyl covariance") {
  WeylSetup wl;
  const auto cells =
      make_partition(GroupKind::PhaseSpaceR2, ChartRegion{-5, 5, -5, 5}, 10, 10);
  const auto obs = CovariantObservable::build(wl.ground_density(), wl.deg, wl.rep, cells);
  test::Rng rng(53);
  for (int trial = 0; trial < 8; ++trial) {
    const GroupElement g{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const BorelCell cell{rng.uniform(-2, 0), rng.uniform(0.5, 2.0), rng.uniform(-2, 0),
                         rng.uniform(0.5, 2.0)};
    BorelCell c{cell.lo0, cell.lo0 + cell.hi0, cell.lo1, cell.lo1 + cell.hi1};
    const auto moved = wl.group.translate_cell(wl.group.inverse(g), c);
    if (moved.lo0 < -5 || moved.hi0 > 5 || moved.lo1 < -5 || moved.hi1 > 5) continue;
    CHECK(covariance_residual(obs, g, c) <= 5e-3);
  }
}

TEST_CASE("translate integral identity recovers the right Haar measure") {
  AffineSetup ax;
  const auto cells =
      make_partition(GroupKind::Affine, ChartRegion{-3, 3, -0.9, 0.9}, 8, 5);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);

  const auto window =
      ax.group.build_region_grid(ChartRegion{-8, 8, -2.5, 2.5}, 24, 18, 4);

  const BorelCell cell{0.0, 1.0, 1.0, 2.0};
  const DensityOperator s1 = ax.bump_density(0.75, 0.4);
  const auto pair = translate_integral_identity(obs, s1, cell, window);
  CHECK(pair.rhs == doctest::Approx(std::log(2.0)));
  CHECK(pair.relative_gap() <= 1e-2);

  // Independence from the probe density.
  test::Rng rng(54);
  Matrix mix = 0.6 * ax.bump_density(0.8, 0.35).matrix() +
               0.4 * ax.bump_density(1.1, 0.5).matrix();
  const auto pair2 = translate_integral_identity(obs, DensityOperator(mix), cell, window);
  const double spread = std::abs(pair.lhs - pair2.lhs) / pair.rhs;
  CHECK(spread <= 1e-3);

  // Empty cell: both sides vanish.
  const auto zero = translate_integral_identity(obs, s1, BorelCell{0, 0, 1, 2}, window);
  CHECK(zero.lhs == doctest::Approx(0.0));
  CHECK(zero.rhs == doctest::Approx(0.0));
}

TEST_CASE("measure identities per cell") {
  AffineSetup ax;
  const auto cells =
      make_partition(GroupKind::Affine, ChartRegion{-3, 3, -0.9, 0.9}, 8, 5);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);

  const BorelCell cell{0.0, 1.0, 1.0, 2.0};
  const auto hs = hs_identity(obs, ax.deg, cell);
  CHECK(hs.rhs == doctest::Approx(std::log(2.0)));
  CHECK(hs.relative_gap() <= 1e-2);

  const auto tr = trace_identity(obs, ax.deg, cell);
  CHECK(tr.rhs == doctest::Approx(std::log(2.0)));
  CHECK(tr.relative_gap() <= 1e-2);

  // Simultaneously across partition cells.
  for (std::size_t i = 0; i < obs.partition().size(); i += 7) {
    const auto& b = obs.partition()[i];
    const double lam = ax.group.cell_measure(b, MeasureSide::Right);
    CHECK(std::abs(trace_identity(obs, ax.deg, b).lhs - lam) <= 1e-2 * lam);
    CHECK(std::abs(hs_identity(obs, ax.deg, b).lhs - lam) <= 1e-2 * lam);
  }

  // Degenerate cell: (0, 0).
  const auto zero = hs_identity(obs, ax.deg, BorelCell{0, 0, 1, 2});
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
}

TEST_CASE("density extraction round trip (affine)") {
  AffineSetup ax;
  const auto cells =
      make_partition(GroupKind::Affine, ChartRegion{-1.5, 1.5, -0.45, 0.45}, 24, 9);
  const DensityOperator s = ax.bump_density();
  BuildOptions opt;
  opt.quad_order = 4;
  const auto obs = CovariantObservable::build(s, ax.deg, ax.rep, cells, opt);

  const auto res = extract_density(obs, ax.deg, ax.rep);
  CHECK(res.dispersion <= 1e-2);
  CHECK(trace_distance(res.density, s) <= 1e-2);

  // Pure input stays nearly pure.
  Eigen::SelfAdjointEigenSolver<Matrix> es(res.density.matrix());
  CHECK(es.eigenvalues()(ax.rep.dim() - 1) >= 1.0 - 1e-2);

  // Distinct generators produce observables whose extractions separate.
  const DensityOperator s2 = ax.bump_density(1.15, 0.5);
  const auto obs2 = CovariantObservable::build(s2, ax.deg, ax.rep, cells, opt);
  const auto res2 = extract_density(obs2, ax.deg, ax.rep);
  const double extracted_gap = 0.5 * trace_norm_hermitian(res.density.matrix() -
                                                          res2.density.matrix());
  const double true_gap = trace_distance(s, s2);
  CHECK(extracted_gap >= 0.9 * true_gap);

  // Broken observable: dispersion certificate trips.
  BuildOptions broken = opt;
  broken.broken_cell = 100;
  const auto bad = CovariantObservable::build(s, ax.deg, ax.rep, cells, broken);
  CHECK_THROWS_AS(extract_density(bad, ax.deg, ax.rep), NotCovariantError);

  // Cells too coarse.
  const auto coarse = make_partition(GroupKind::Affine, ChartRegion{-2, 2, -0.5, 0.5}, 2, 2);
  const auto cobs = CovariantObservable::build(s, ax.deg, ax.rep, coarse, opt);
  CHECK_THROWS_AS(extract_density(cobs, ax.deg, ax.rep), std::invalid_argument);
}

TEST_CASE("density extraction round trip (weyl)") {
  WeylSetup wl;
  const auto cells =
      make_partition(GroupKind::PhaseSpaceR2, ChartRegion{-3, 3, -3, 3}, 24, 24);
  Matrix mix = 0.7 * wl.ground_density().matrix() +
               0.3 * DensityOperator::pure(wl.rep.coherent_state(0.8, -0.5)).matrix();
  const DensityOperator s{mix};
  const auto obs = CovariantObservable::build(s, wl.deg, wl.rep, cells);
  const auto res = extract_density(obs, wl.deg, wl.rep);
  CHECK(res.dispersion <= 1e-2);
  CHECK(trace_distance(res.density, s) <= 1e-2);
}

TEST_CASE("quantization map") {
  AffineSetup ax;
  const auto cells =
      make_partition(GroupKind::Affine, ChartRegion{-2, 2, -0.6, 0.6}, 6, 4);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);

  // Gamma(1) = sum of cell operators.
  const Matrix one = gamma_map(obs, [](const GroupElement&) { return Complex(1.0, 0.0); },
                               1.0);
  CHECK((one - obs.total()).norm() <= 1e-12 * obs.total().norm());

  // Gamma(chi_B) = E(B).
  const BorelCell target = obs.partition()[5];
  const auto chi = [&](const GroupElement& g) {
    Group group(GroupKind::Affine);
    return group.cell_contains(target, g) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
  };
  const Matrix eb = gamma_map(obs, chi, 1.0);
  CHECK((eb - obs.cell_operators()[5]).norm() <= 1e-12);

  // Linearity on random bounded samples.
  test::Rng rng(55);
  const auto f = [&](const GroupElement& g) {
    return Complex(std::sin(1.3 * g.x) * g.y, 0.2 * std::cos(g.y));
  };
  const auto h = [&](const GroupElement& g) {
    return Complex(0.5 * g.x, std::sin(g.y));
  };
  const Complex alpha(0.7, -0.3), beta(1.1, 0.4);
  const auto combo = [&](const GroupElement& g) { return alpha * f(g) + beta * h(g); };
  const Matrix lhs = gamma_map(obs, combo, 50.0);
  const Matrix rhs = alpha * gamma_map(obs, f, 50.0) + beta * gamma_map(obs, h, 50.0);
  CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));

  // Positivity for nonnegative f.
  const auto pos = [](const GroupElement& g) {
    return Complex(1.0 + std::sin(g.x) * 0.5, 0.0);
  };
  CHECK(min_eigenvalue(gamma_map(obs, pos, 2.0)) >= -1e-8);

  // Covariance: beta(g)^*(Gamma(f)) = Gamma(f(g .)) for f supported well
  // inside the partitioned region.
  Group group(GroupKind::Affine);
  const GroupElement g{0.1, std::exp(0.05)};
  const auto fbump = [&](const GroupElement& x) {
    const double db = x.x / 0.55, du = std::log(x.y) / 0.16;
    return Complex(std::exp(-0.5 * (db * db + du * du)), 0.0);
  };
  const auto fshift = [&](const GroupElement& x) { return fbump(group.compose(g, x)); };
  const Matrix cov_lhs = ax.rep.beta_adjoint(g, gamma_map(obs, fbump, 1.0));
  const Matrix cov_rhs = gamma_map(obs, fshift, 1.0);
  CHECK((cov_lhs - cov_rhs).norm() <= 5e-3 * std::max(1.0, cov_rhs.norm()));

  // Unbounded / non-finite samples are rejected.
  CHECK_THROWS_AS(gamma_map(obs, [](const GroupElement&) {
                    return Complex(std::nan(""), 0.0);
                  },
                  1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(gamma_map(obs, [](const GroupElement&) { return Complex(5.0, 0.0); },
                            1.0),
                  std::invalid_argument);
}

TEST_CASE("manifest serialization") {
  AffineSetup ax;
  const auto cells = make_partition(GroupKind::Affine, ChartRegion{-1, 1, -0.4, 0.4}, 3, 2);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);
  const auto j = observable_manifest(obs);
  CHECK(j["group"] == "affine");
  CHECK(j["n_cells"] == 6);
  CHECK(j["provenance"] == "constructed");
  CHECK(j["partition"].size() == 6);

  // External observables round-trip through cell ops.
  auto ext = CovariantObservable::external(GroupKind::Affine, obs.partition(),
                                           obs.cell_operators());
  CHECK_FALSE(ext.has_provenance());
  CHECK_THROWS_AS(ext.evaluate_cell(cells[0]), std::logic_error);
  CHECK((ext.cell_operator(cells[0]) - obs.cell_operators()[0]).norm() == 0.0);
}

TEST_CASE("hs identity rejects floor-clipped spectral mass") {
  AffineSetup ax;
  const int n = ax.rep.dim();
  // Degree whose top mode is below the regularization floor.
  RealVector c(n);
  for (int k = 0; k < n; ++k) c(k) = 1.0;
  c(n - 1) = 1e-12;
  const FormalDegree clipped = FormalDegree::diagonal(std::move(c), 1e-6);

  // External observable with all its mass on the clipped direction.
  Matrix op = Matrix::Zero(n, n);
  op(n - 1, n - 1) = 0.5;
  const BorelCell cell{0, 1, 1, 2};
  auto ext = CovariantObservable::external(GroupKind::Affine, {cell}, {op});
  CHECK_THROWS_AS(hs_identity(ext, clipped, cell), OutsideDomainError);
}

TEST_CASE("manifest round trip through the filesystem") {
  AffineSetup ax;
  const auto cells = make_partition(GroupKind::Affine, ChartRegion{-1, 1, -0.3, 0.3}, 2, 2);
  const auto obs = CovariantObservable::build(ax.bump_density(), ax.deg, ax.rep, cells);

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "covq_manifest_test";
  fs::remove_all(dir);
  fs::create_directories(dir / "cells");
  auto manifest = observable_manifest(obs);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < obs.partition().size(); ++i) {
    const std::string name = "cells/cell_" + std::to_string(i) + ".json";
    std::ofstream f(dir / name);
    f << matrix_to_json(obs.cell_operators()[i]).dump();
    files.push_back(name);
  }
  manifest["cell_files"] = files;
  {
    std::ofstream mf(dir / "povm_manifest.json");
    mf << manifest.dump();
  }

  const auto loaded = load_observable((dir / "povm_manifest.json").string());
  CHECK_FALSE(loaded.has_provenance());
  REQUIRE(loaded.partition().size() == obs.partition().size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    CHECK((loaded.cell_operators()[i] - obs.cell_operators()[i]).norm() == 0.0);
}

TEST_SUITE_END();
