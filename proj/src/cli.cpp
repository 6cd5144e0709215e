// SPDX-License-Identifier: Apache-2.0

#include "covq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "covq/duflo.hpp"
#include "covq/errors.hpp"
#include "covq/povm.hpp"
#include "covq/random.hpp"
#include "covq/report.hpp"

namespace covq {

namespace {

std::string fmt_g(const GroupElement& g) {
  return CsvReport::format_number(g.x) + ";" + CsvReport::format_number(g.y);
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

void announce(const std::string& suite, const CsvReport& report, const std::string& path) {
  std::cout << "[covq] " << suite << ": " << report.size() << " checks, "
            << report.failures() << " failures -> " << path << "\n";
}

Vector named_state(const Representation& rep, const std::string& spec) {
  if (spec == "default" || spec == "admissible-bump" || spec == "gaussian")
    return rep.reference_state();
  if (spec.rfind("basis:", 0) == 0) {
    const int k = std::stoi(spec.substr(6));
    return rep.basis_state(k);
  }
  throw ConfigError("unknown density spec: " + spec);
}

// Roughness of the coefficient sequence; spikes score ~2, resolved smooth
// vectors score well below one. Used only to flag densities whose group
// integrals the window cannot be expected to capture.
double roughness(const Vector& v) {
  double num = 0.0;
  for (Eigen::Index k = 0; k + 1 < v.size(); ++k) num += std::norm(v(k + 1) - v(k));
  return num / std::max(v.squaredNorm(), 1e-300);
}

DensityOperator make_density(const Representation& rep, const std::string& spec,
                             std::vector<std::string>& warnings) {
  if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
    std::ifstream in(spec);
    if (!in) throw ConfigError("cannot open density file: " + spec);
    nlohmann::json j;
    in >> j;
    Matrix m = matrix_from_json(j);
    if (m.rows() != rep.dim())
      throw std::invalid_argument("density dimension does not match the representation");
    return DensityOperator(m, 1e-9, 1e-9);  // throws when not a density operator
  }
  const Vector v = named_state(rep, spec);
  if (roughness(v) > 0.5)
    warnings.push_back("density '" + spec +
                       "' is rough on the grid; group integrals may be window-limited");
  return DensityOperator::pure(v);
}

Matrix random_smooth_psd(const Representation& rep, SplitMix& rng, int rank) {
  Matrix out = Matrix::Zero(rep.dim(), rep.dim());
  for (int r = 0; r < rank; ++r) {
    Vector v = Vector::Zero(rep.dim());
    for (int b = 0; b < 3; ++b) {
      const Complex coeff = rng.cgauss();
      if (rep.kind() == RepKind::AffineWavelet)
        v += coeff * rep.log_bump(rng.uniform(std::log(1.2), std::log(3.0)), 0.3);
      else
        v += coeff * rep.coherent_state(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5));
    }
    v /= v.norm();
    out += rng.uniform(0.2, 1.0) * (v * v.adjoint());
  }
  return out;
}

HaarGrid estimation_grid(const RunConfig& cfg, const Representation& rep) {
  Group group(rep.group_kind());
  if (rep.kind() == RepKind::AffineWavelet) {
    const ChartRegion region{-cfg.duflo.b_halfwidth, cfg.duflo.b_halfwidth,
                             cfg.duflo.log_a_lo, cfg.duflo.log_a_hi};
    return group.build_region_grid(region, cfg.duflo.panels_b, cfg.duflo.panels_a,
                                   cfg.duflo.gl_order, QuadratureRule::GaussLegendre);
  }
  const int panels = 2 * rep.dim();
  return group.build_region_grid(rep.torus_region(), panels, panels, 1,
                                 QuadratureRule::Midpoint);
}

GroupElement sample_group_element(const Representation& rep, const RunConfig& cfg,
                                  SplitMix& rng) {
  if (rep.kind() == RepKind::AffineWavelet) {
    // b continuous; dilations from the rep's native lattice, where the
    // truncated representation is exact (off-lattice interpolation residuals
    // are tracked by the rep diagnostics).
    const int max_shift = static_cast<int>(3.0 / rep.delta_u());
    const int shift = rng.uniform_int(-max_shift, max_shift);
    return GroupElement{rng.uniform(cfg.region.lo0, cfg.region.hi0),
                        std::exp(shift * rep.delta_u())};
  }
  return GroupElement{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
}

DensityOperator mixed_density(const Representation& rep, int which) {
  if (rep.kind() == RepKind::AffineWavelet) {
    const double mid = 0.5 * (rep.u_min() + rep.u_max());
    switch (which) {
      case 0: return DensityOperator::pure(rep.log_bump(mid, 0.45));
      case 1: {
        Matrix m = 0.6 * DensityOperator::pure(rep.log_bump(mid - 0.15, 0.35)).matrix() +
                   0.4 * DensityOperator::pure(rep.log_bump(mid + 0.2, 0.5)).matrix();
        return DensityOperator(m);
      }
      default: {
        Matrix m = 0.5 * DensityOperator::pure(rep.log_bump(mid + 0.1, 0.4)).matrix() +
                   0.3 * DensityOperator::pure(rep.log_bump(mid - 0.25, 0.45)).matrix() +
                   0.2 * DensityOperator::pure(rep.log_bump(mid + 0.35, 0.35)).matrix();
        return DensityOperator(m);
      }
    }
  }
  switch (which) {
    case 0: return DensityOperator::pure(rep.gaussian_state());
    case 1: {
      Matrix m = 0.7 * DensityOperator::pure(rep.gaussian_state()).matrix() +
                 0.3 * DensityOperator::pure(rep.coherent_state(0.8, -0.5)).matrix();
      return DensityOperator(m);
    }
    default: {
      Matrix m = 0.5 * DensityOperator::pure(rep.gaussian_state()).matrix() +
                 0.5 * DensityOperator::pure(rep.coherent_state(-0.6, 0.9)).matrix();
      return DensityOperator(m);
    }
  }
}

} // namespace

int run_verify_duflo(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const Representation rep = cfg.make_rep();
  const std::string gname = to_string(rep.group_kind());
  const HaarGrid grid = estimation_grid(cfg, rep);

  bool ok = true;

  // --- formal degree estimate ---
  CsvReport degree_report("verify-duflo");
  {
    EstimateOptions opt;
    opt.floor_rel = cfg.duflo.floor_rel;
    opt.boundary_threshold = cfg.duflo.boundary_threshold;

    if (rep.kind() == RepKind::AffineWavelet) {
      const Matrix probes =
          default_affine_probes(rep, cfg.duflo.probe_xi_lo, cfg.duflo.probe_xi_hi,
                                cfg.duflo.probe_sigma, cfg.duflo.probe_spacing);
      const auto est = estimate_degree(rep, grid, probes, opt);

      const auto& xi = rep.frequencies();
      Matrix cinv2 = Matrix::Zero(rep.dim(), rep.dim());
      for (int k = 0; k < rep.dim(); ++k) cinv2(k, k) = kAffineKappa / xi(k);
      const Matrix ba = probes.adjoint() * cinv2 * probes;
      const int m = static_cast<int>(probes.cols());
      for (int i = 1; i < m - 1; ++i) {
        const double ana = ba(i, i).real();
        const double est_v = est.quad_form(i, i).real();
        const double rel = std::abs(est_v - ana) / ana;
        degree_report.add_row("degree_vs_analytic", gname, "probe=" + std::to_string(i),
                              "", est_v, ana, rel, cfg.tol.affine_degree_rel,
                              rel <= cfg.tol.affine_degree_rel);
      }
      const int rank = static_cast<int>(est.spectrum.size());
      const double spread = est.spectrum(rank - 1) / est.spectrum(0);
      const double bound = 0.8 * cfg.duflo.probe_xi_hi / cfg.duflo.probe_xi_lo;
      degree_report.add_row("degree_unbounded_trend", gname, "spectrum_ratio", "", spread,
                            bound, std::max(0.0, bound - spread), 0.0, spread >= bound);
      degree_report.add_row("degree_boundary_mass", gname, "", "", est.boundary_fraction,
                            cfg.duflo.boundary_threshold, est.boundary_fraction,
                            cfg.duflo.boundary_threshold,
                            est.boundary_fraction <= cfg.duflo.boundary_threshold);
    } else {
      const Matrix probes = Matrix::Identity(rep.dim(), rep.dim());
      const auto est = estimate_degree(rep, grid, probes, opt);
      const int rank = static_cast<int>(est.spectrum.size());
      const double ratio = est.spectrum(rank - 1) / est.spectrum(0) - 1.0;
      degree_report.add_row("degree_constant_spectrum", gname, "max_over_min-1", "",
                            est.spectrum(rank - 1), est.spectrum(0), ratio,
                            cfg.tol.weyl_spectrum_rel, ratio <= cfg.tol.weyl_spectrum_rel);
      const double mean = est.spectrum.mean();
      const double rel = std::abs(mean - kWeylFormalConstant) / kWeylFormalConstant;
      degree_report.add_row("degree_constant_value", gname, "mean_vs_2pi", "", mean,
                            kWeylFormalConstant, rel, cfg.tol.weyl_spectrum_rel,
                            rel <= cfg.tol.weyl_spectrum_rel);
    }
  }
  ok = ok && degree_report.all_passed();
  const std::string degree_path = report_path(out_dir, "duflo_degree");
  degree_report.write(degree_path);
  announce("verify-duflo/degree", degree_report, degree_path);

  // --- commutation relation ---
  CsvReport comm_report("verify-duflo");
  {
    const FormalDegree deg = rep.kind() == RepKind::AffineWavelet
                                 ? analytic_affine_degree(rep, cfg.duflo.floor_rel)
                                 : analytic_weyl_degree(rep, cfg.duflo.floor_rel);
    SplitMix rng(cfg.seed ^ 0x636f6d6dULL);
    std::vector<GroupElement> samples;
    samples.reserve(cfg.duflo.commutation_samples);
    for (int i = 0; i < cfg.duflo.commutation_samples; ++i)
      samples.push_back(sample_group_element(rep, cfg, rng));
    const auto report = verify_commutation(rep, deg, samples);
    const double tol = rep.kind() == RepKind::AffineWavelet ? cfg.tol.commutation_affine
                                                            : cfg.tol.commutation_weyl;
    for (const auto& row : report.rows) {
      comm_report.add_row("commutation_C", gname, fmt_g(row.g), "", row.residual_c, 0.0,
                          row.residual_c, tol, row.residual_c <= tol);
      comm_report.add_row("commutation_Cinv", gname, fmt_g(row.g), "", row.residual_cinv,
                          0.0, row.residual_cinv, tol, row.residual_cinv <= tol);
    }
    comm_report.add_row("commutation_max", gname, "", "", report.max_c, 0.0, report.max_c,
                        tol, report.max_c <= tol);
  }
  ok = ok && comm_report.all_passed();
  const std::string comm_path = report_path(out_dir, "duflo_commutation");
  comm_report.write(comm_path);
  announce("verify-duflo/commutation", comm_report, comm_path);

  // --- orthogonality identity ---
  CsvReport orth_report("verify-duflo");
  {
    const FormalDegree deg = rep.kind() == RepKind::AffineWavelet
                                 ? analytic_affine_degree(rep, cfg.duflo.floor_rel)
                                 : analytic_weyl_degree(rep, cfg.duflo.floor_rel);
    SplitMix rng(cfg.seed ^ 0x6f727468ULL);
    for (int pair = 0; pair < cfg.duflo.orthogonality_pairs; ++pair) {
      const Matrix a = random_smooth_psd(rep, rng, 2);
      const Matrix s = random_smooth_psd(rep, rng, 2);
      const auto res = orthogonality_identity(rep, deg, grid, a, s);
      const double rel = std::abs(res.lhs - res.rhs) / std::max(res.rhs, 1e-300);
      orth_report.add_row("orthogonality", gname, "pair=" + std::to_string(pair), "",
                          res.lhs, res.rhs, rel, cfg.tol.orthogonality_rel,
                          rel <= cfg.tol.orthogonality_rel);
    }
  }
  ok = ok && orth_report.all_passed();
  const std::string orth_path = report_path(out_dir, "duflo_orthogonality");
  orth_report.write(orth_path);
  announce("verify-duflo/orthogonality", orth_report, orth_path);

  return ok ? 0 : 1;
}

int run_build_povm(const RunConfig& cfg, const std::string& out_dir,
                   const std::string& density_spec) {
  ensure_dir(out_dir);
  const Representation rep = cfg.make_rep();
  const std::string gname = to_string(rep.group_kind());
  Group group(rep.group_kind());

  std::vector<std::string> warnings;
  DensityOperator density = make_density(rep, density_spec, warnings);
  const FormalDegree deg = rep.kind() == RepKind::AffineWavelet
                               ? analytic_affine_degree(rep, cfg.duflo.floor_rel)
                               : analytic_weyl_degree(rep, cfg.duflo.floor_rel);

  const ChartRegion region = cfg.effective_region(rep);
  const auto cells =
      make_partition(rep.group_kind(), region, cfg.povm.partition0, cfg.povm.partition1);
  BuildOptions opt;
  opt.quad_order = cfg.povm.build_order;
  opt.rule = cfg.quad_rule;
  opt.psd_tol = cfg.tol.cell_psd;
  const auto obs = CovariantObservable::build(density, deg, rep, cells, opt);

  CsvReport report("build-povm");
  report.add_row("cell_psd_min_eig", gname, "", "", obs.min_cell_eigenvalue(), 0.0,
                 std::max(0.0, -obs.min_cell_eigenvalue()), cfg.tol.cell_psd,
                 obs.min_cell_eigenvalue() >= -cfg.tol.cell_psd);

  const double full = normalization_residual(obs);
  report.add_row("normalization_full", gname, "", "", full, 0.0, full, 1e300, true);
  const Matrix frame = rep.kind() == RepKind::AffineWavelet
                           ? rep.band_frame(cfg.frame.xi_lo, cfg.frame.xi_hi,
                                            cfg.frame.sigma_u)
                           : Matrix(Matrix::Identity(rep.dim(), rep.dim()));
  // Logged here; the acceptance ladder gates the finest-refinement value.
  const double interior = normalization_residual(obs, frame);
  report.add_row("normalization_interior", gname, "", "", interior, 0.0, interior, 1e300,
                 true);

  for (const auto& w : warnings) report.add_row("warning", gname, w, "", 0, 0, 0, 0, true);
  for (const auto& w : obs.warnings())
    report.add_row("cell_warning", gname, w, "", 0, 0, 0, 0, true);

  // Manifest + per-cell operator files.
  const std::string cell_dir = out_dir.empty() ? "cells" : out_dir + "/cells";
  std::filesystem::create_directories(cell_dir);
  auto manifest = observable_manifest(obs);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < obs.partition().size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "cell_%04zu.json", i);
    std::ofstream f(cell_dir + "/" + name, std::ios::binary);
    f << matrix_to_json(obs.cell_operators()[i]).dump();
    files.push_back(std::string("cells/") + name);
  }
  manifest["cell_files"] = std::move(files);
  {
    std::ofstream mf((out_dir.empty() ? std::string() : out_dir + "/") +
                         "povm_manifest.json",
                     std::ios::binary);
    mf << manifest.dump(2) << "\n";
  }

  const std::string path = report_path(out_dir, "povm_build");
  report.write(path);
  announce("build-povm", report, path);
  return report.all_passed() ? 0 : 1;
}

int run_check_covariance(const RunConfig& cfg, const std::string& out_dir,
                         bool inject_broken) {
  ensure_dir(out_dir);
  const Representation rep = cfg.make_rep();
  const std::string gname = to_string(rep.group_kind());
  Group group(rep.group_kind());

  const FormalDegree deg = rep.kind() == RepKind::AffineWavelet
                               ? analytic_affine_degree(rep, cfg.duflo.floor_rel)
                               : analytic_weyl_degree(rep, cfg.duflo.floor_rel);
  const DensityOperator density = mixed_density(rep, 0);

  const ChartRegion region = rep.kind() == RepKind::AffineWavelet
                                 ? cfg.povm.identity_region
                                 : ChartRegion{-5.0, 5.0, -5.0, 5.0};
  const int n0 = rep.kind() == RepKind::AffineWavelet ? 16 : 10;
  const int n1 = rep.kind() == RepKind::AffineWavelet ? 6 : 10;
  const auto cells = make_partition(rep.group_kind(), region, n0, n1);

  BuildOptions opt;
  opt.quad_order = cfg.povm.build_order;
  // Center cell in both axes, so small translates stay inside the region.
  const int broken_index = (n0 / 2) * n1 + n1 / 2;
  if (inject_broken) opt.broken_cell = broken_index;
  const auto obs = CovariantObservable::build(density, deg, rep, cells, opt);

  CsvReport report("check-covariance");
  SplitMix rng(cfg.seed ^ 0x636f7661ULL);
  int produced = 0, attempts = 0;
  while (produced < cfg.povm.covariance_pairs && attempts < 500) {
    ++attempts;
    const std::size_t idx = rng.next_u64() % cells.size();
    GroupElement g;
    if (rep.kind() == RepKind::AffineWavelet)
      g = GroupElement{rng.uniform(-0.6, 0.6), std::exp(rng.uniform(-0.25, 0.25))};
    else
      g = GroupElement{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const auto& cell = cells[idx];
    const auto moved = group.translate_cell(group.inverse(g), cell);
    try {
      const double res = covariance_residual(obs, g, cell);
      report.add_row("covariance", gname, fmt_g(g), "cell=" + std::to_string(idx), res,
                     0.0, res, cfg.tol.covariance, res <= cfg.tol.covariance);
      ++produced;
    } catch (const std::invalid_argument&) {
      (void)moved;  // translate left the region; resample
    }
  }

  if (inject_broken) {
    const GroupElement g = rep.kind() == RepKind::AffineWavelet
                               ? GroupElement{0.1, std::exp(0.05)}
                               : GroupElement{0.2, 0.2};
    const double res = covariance_residual(obs, g, cells[broken_index]);
    const double bound = cfg.tol.covariance_broken_factor * cfg.tol.covariance;
    // The injected defect must be detected: this row passes the *detection*
    // requirement but the suite as a whole reports the broken observable.
    report.add_row("covariance_broken_cell", gname, fmt_g(g),
                   "cell=" + std::to_string(broken_index), res, bound, res,
                   cfg.tol.covariance, res <= cfg.tol.covariance);
  }

  const std::string path = report_path(out_dir, "covariance");
  report.write(path);
  announce("check-covariance", report, path);
  return report.all_passed() ? 0 : 1;
}

int run_roundtrip(const RunConfig& cfg, const std::string& out_dir, bool inject_broken) {
  ensure_dir(out_dir);
  const Representation rep = cfg.make_rep();
  const std::string gname = to_string(rep.group_kind());

  const ChartRegion region = rep.kind() == RepKind::AffineWavelet
                                 ? cfg.povm.extract_region
                                 : ChartRegion{-3.0, 3.0, -3.0, 3.0};
  const int n0 = rep.kind() == RepKind::AffineWavelet ? cfg.povm.extract_n0 : 24;
  const int n1 = rep.kind() == RepKind::AffineWavelet ? cfg.povm.extract_n1 : 24;

  const ExtractOptions ex_opt;
  if ((region.hi0 - region.lo0) / n0 > ex_opt.max_cell_width0 ||
      (region.hi1 - region.lo1) / n1 > ex_opt.max_cell_width1)
    throw ConfigError("cells too coarse for density extraction");

  const FormalDegree deg = rep.kind() == RepKind::AffineWavelet
                               ? analytic_affine_degree(rep, cfg.duflo.floor_rel)
                               : analytic_weyl_degree(rep, cfg.duflo.floor_rel);
  const auto cells = make_partition(rep.group_kind(), region, n0, n1);

  BuildOptions opt;
  opt.quad_order = cfg.povm.build_order;
  if (inject_broken) opt.broken_cell = static_cast<int>(cells.size() / 2);

  CsvReport report("roundtrip");
  const DensityOperator s = mixed_density(rep, 0);
  const auto obs = CovariantObservable::build(s, deg, rep, cells, opt);

  int exit_code = 0;
  try {
    const auto res = extract_density(obs, deg, rep, ex_opt);
    const double dist = trace_distance(res.density, s);
    report.add_row("roundtrip_trace_distance", gname, "", "", dist, 0.0, dist,
                   cfg.tol.roundtrip_trace, dist <= cfg.tol.roundtrip_trace);
    report.add_row("roundtrip_dispersion", gname, "", "", res.dispersion, 0.0,
                   res.dispersion, cfg.tol.roundtrip_dispersion,
                   res.dispersion <= cfg.tol.roundtrip_dispersion);
    report.add_row("roundtrip_projection_shift", gname, "", "", res.projection_shift, 0.0,
                   res.projection_shift, 1e300, true);

    // Uniqueness probe: a distinct generator separates.
    const DensityOperator s2 = mixed_density(rep, 1);
    const auto obs2 = CovariantObservable::build(s2, deg, rep, cells, opt);
    const auto res2 = extract_density(obs2, deg, rep, ex_opt);
    const double extracted_gap =
        0.5 * trace_norm_hermitian(res.density.matrix() - res2.density.matrix());
    const double true_gap = trace_distance(s, s2);
    const double bound = cfg.tol.separation_factor * true_gap;
    report.add_row("roundtrip_separation", gname, "", "", extracted_gap, bound,
                   std::max(0.0, bound - extracted_gap), 0.0, extracted_gap >= bound);
    if (!report.all_passed()) exit_code = 1;
  } catch (const NotCovariantError& e) {
    report.add_row("roundtrip_not_covariant", gname, e.what(), "", 1.0, 0.0, 1.0,
                   cfg.tol.roundtrip_dispersion, false);
    exit_code = 1;
  }

  const std::string path = report_path(out_dir, "roundtrip");
  report.write(path);
  announce("roundtrip", report, path);
  return exit_code;
}

int run_report(const std::string& out_dir) {
  const char* names[] = {"duflo_degree", "duflo_commutation", "duflo_orthogonality",
                         "povm_build", "covariance", "roundtrip"};
  CsvReport summary("report");
  bool any = false;
  for (const char* name : names) {
    const std::string path = report_path(out_dir, name);
    std::ifstream in(path);
    if (!in) continue;
    any = true;
    std::string line;
    std::getline(in, line);  // header
    int total = 0, failed = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++total;
      if (line.size() >= 4 && line.substr(line.size() - 4) == "FAIL") ++failed;
    }
    summary.add_row("suite_summary", name, "rows=" + std::to_string(total), "",
                    static_cast<double>(total), 0.0, static_cast<double>(failed), 0.0,
                    failed == 0);
  }
  if (!any) {
    std::cerr << "[covq] report: no suite outputs found in '" << out_dir << "'\n";
    return 2;
  }
  const std::string path = report_path(out_dir, "report_summary");
  summary.write(path);
  announce("report", summary, path);
  return summary.all_passed() ? 0 : 1;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"covariant observable construction and verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".", density = "default";
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  double tol_scale = 1.0;
  bool inject_broken = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory for CSV reports");
  auto* seed_opt = app.add_option("--seed", seed_override, "override config seed");
  app.add_option("--tolerance-scale", tol_scale, "multiply residual tolerances");

  auto* duflo_cmd = app.add_subcommand("verify-duflo", "formal degree suite");
  auto* build_cmd = app.add_subcommand("build-povm", "construct a covariant observable");
  build_cmd->add_option("--density", density,
                        "gaussian | admissible-bump | basis:K | file.json");
  auto* cov_cmd = app.add_subcommand("check-covariance", "covariance residual suite");
  cov_cmd->add_flag("--inject-broken", inject_broken, "negative control");
  auto* round_cmd = app.add_subcommand("roundtrip", "build/extract round trip");
  round_cmd->add_flag("--inject-broken", inject_broken, "negative control");
  auto* report_cmd = app.add_subcommand("report", "aggregate suite outputs");

  std::vector<const char*> argv;
  argv.push_back("covq");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  seed_given = seed_opt->count() > 0;

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (seed_given) cfg.seed = seed_override;
    cfg.tol.scale(tol_scale);

    if (duflo_cmd->parsed()) return run_verify_duflo(cfg, out_dir);
    if (build_cmd->parsed()) return run_build_povm(cfg, out_dir, density);
    if (cov_cmd->parsed()) return run_check_covariance(cfg, out_dir, inject_broken);
    if (round_cmd->parsed()) return run_roundtrip(cfg, out_dir, inject_broken);
    if (report_cmd->parsed()) return run_report(out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "[covq] config error: " << e.what() << "\n";
    return 2;
  } catch (const TruncationDominatedError& e) {
    std::cerr << "[covq] window error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    // Density-spec violations are measured failures (exit 1); everything
    // else reaching here is a usage problem.
    std::cerr << "[covq] invalid input: " << e.what() << "\n";
    const std::string what = e.what();
    if (what.find("density") != std::string::npos) return 1;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "[covq] error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

} // namespace covq
