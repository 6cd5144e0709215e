// SPDX-License-Identifier: Apache-2.0

#include "covq/config.hpp"

#include <fstream>

namespace covq {

void Tolerances::scale(double s) {
  if (!(s > 0.0)) throw ConfigError("tolerance scale must be positive");
  weyl_spectrum_rel *= s;
  affine_degree_rel *= s;
  commutation_weyl *= s;
  commutation_affine *= s;
  orthogonality_rel *= s;
  normalization_interior *= s;
  covariance *= s;
  measure_identity_rel *= s;
  translate_spread *= s;
  roundtrip_trace *= s;
  roundtrip_dispersion *= s;
}

Representation RunConfig::make_rep() const {
  if (group_kind == GroupKind::Affine)
    return Representation::affine(n_modes, freq_max, nodes_per_octave);
  return Representation::weyl(n_modes);
}

ChartRegion RunConfig::effective_region(const Representation& rep) const {
  if (group_kind == GroupKind::PhaseSpaceR2 && !region_given) return rep.torus_region();
  return region;
}

namespace {

double num(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("expected number for ") + key);
  return j.at(key).get<double>();
}

int integer(const nlohmann::json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw ConfigError(std::string("expected integer for ") + key);
  return j.at(key).get<int>();
}

void interval(const nlohmann::json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2)
    throw ConfigError(std::string(key) + " must be a [lo, hi] pair");
  lo = v[0].get<double>();
  hi = v[1].get<double>();
  if (!(lo < hi)) throw ConfigError(std::string(key) + " must satisfy lo < hi");
}

} // namespace

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;

  if (j.contains("group")) {
    const auto& g = j.at("group");
    if (g.contains("kind")) {
      const std::string kind = g.at("kind").get<std::string>();
      if (kind == "affine")
        cfg.group_kind = GroupKind::Affine;
      else if (kind == "phase_space_r2" || kind == "weyl")
        cfg.group_kind = GroupKind::PhaseSpaceR2;
      else
        throw ConfigError("unknown group.kind: " + kind);
    }
  }

  if (j.contains("rep")) {
    const auto& r = j.at("rep");
    if (r.contains("kind")) {
      const std::string kind = r.at("kind").get<std::string>();
      if (kind == "affine")
        cfg.group_kind = GroupKind::Affine;
      else if (kind == "weyl" || kind == "phase_space_r2")
        cfg.group_kind = GroupKind::PhaseSpaceR2;
      else
        throw ConfigError("unknown rep.kind: " + kind);
    }
    cfg.n_modes = integer(r, "n_modes", cfg.n_modes);
    if (cfg.n_modes < 8) throw ConfigError("rep.n_modes must be >= 8");
    if (r.contains("freq_window")) {
      double lo = 0.0, hi = cfg.freq_max;
      interval(r, "freq_window", lo, hi);
      if (!(hi > 0.0)) throw ConfigError("rep.freq_window upper edge must be positive");
      cfg.freq_max = hi;
    }
    cfg.nodes_per_octave = integer(r, "nodes_per_octave", cfg.nodes_per_octave);
    if (cfg.nodes_per_octave < 1) throw ConfigError("rep.nodes_per_octave must be >= 1");
    if (r.contains("multiplier")) {
      const std::string m = r.at("multiplier").get<std::string>();
      if (m != "symmetric")
        throw ConfigError("only the symmetric multiplier convention is supported");
    }
  }

  if (j.contains("region")) {
    const auto& r = j.at("region");
    interval(r, "b", cfg.region.lo0, cfg.region.hi0);
    interval(r, "q", cfg.region.lo0, cfg.region.hi0);
    interval(r, "log_a", cfg.region.lo1, cfg.region.hi1);
    interval(r, "p", cfg.region.lo1, cfg.region.hi1);
    cfg.region_given = true;
  }

  if (j.contains("quad")) {
    const auto& q = j.at("quad");
    cfg.quad_order = integer(q, "order", cfg.quad_order);
    if (cfg.quad_order < 1) throw ConfigError("quad.order must be >= 1");
    cfg.max_quad_order = integer(q, "max_order", cfg.max_quad_order);
    if (cfg.quad_order > cfg.max_quad_order)
      throw ConfigError("quad.order exceeds quad.max_order");
    if (q.contains("rule")) {
      const std::string rule = q.at("rule").get<std::string>();
      if (rule == "midpoint")
        cfg.quad_rule = QuadratureRule::Midpoint;
      else if (rule == "gauss" || rule == "gauss_legendre")
        cfg.quad_rule = QuadratureRule::GaussLegendre;
      else
        throw ConfigError("unknown quad.rule: " + rule);
    }
  }

  if (j.contains("duflo")) {
    const auto& d = j.at("duflo");
    cfg.duflo.b_halfwidth = num(d, "b_halfwidth", cfg.duflo.b_halfwidth);
    cfg.duflo.log_a_lo = num(d, "log_a_lo", cfg.duflo.log_a_lo);
    cfg.duflo.log_a_hi = num(d, "log_a_hi", cfg.duflo.log_a_hi);
    cfg.duflo.panels_b = integer(d, "panels_b", cfg.duflo.panels_b);
    cfg.duflo.panels_a = integer(d, "panels_a", cfg.duflo.panels_a);
    cfg.duflo.gl_order = integer(d, "gl_order", cfg.duflo.gl_order);
    cfg.duflo.probe_xi_lo = num(d, "probe_xi_lo", cfg.duflo.probe_xi_lo);
    cfg.duflo.probe_xi_hi = num(d, "probe_xi_hi", cfg.duflo.probe_xi_hi);
    cfg.duflo.probe_sigma = num(d, "probe_sigma", cfg.duflo.probe_sigma);
    cfg.duflo.probe_spacing = integer(d, "probe_spacing", cfg.duflo.probe_spacing);
    cfg.duflo.floor_rel = num(d, "floor_rel", cfg.duflo.floor_rel);
    cfg.duflo.boundary_threshold = num(d, "boundary_threshold", cfg.duflo.boundary_threshold);
    cfg.duflo.commutation_samples = integer(d, "commutation_samples", cfg.duflo.commutation_samples);
    cfg.duflo.orthogonality_pairs = integer(d, "orthogonality_pairs", cfg.duflo.orthogonality_pairs);
  }

  if (j.contains("povm")) {
    const auto& p = j.at("povm");
    cfg.povm.partition0 = integer(p, "partition0", cfg.povm.partition0);
    cfg.povm.partition1 = integer(p, "partition1", cfg.povm.partition1);
    cfg.povm.build_order = integer(p, "build_order", cfg.povm.build_order);
    if (cfg.povm.partition0 < 1 || cfg.povm.partition1 < 1 || cfg.povm.build_order < 1)
      throw ConfigError("povm partition/order must be >= 1");
    interval(p, "identity_b", cfg.povm.identity_region.lo0, cfg.povm.identity_region.hi0);
    interval(p, "identity_log_a", cfg.povm.identity_region.lo1, cfg.povm.identity_region.hi1);
    cfg.povm.identity_n0 = integer(p, "identity_n0", cfg.povm.identity_n0);
    cfg.povm.identity_n1 = integer(p, "identity_n1", cfg.povm.identity_n1);
    interval(p, "extract_b", cfg.povm.extract_region.lo0, cfg.povm.extract_region.hi0);
    interval(p, "extract_log_a", cfg.povm.extract_region.lo1, cfg.povm.extract_region.hi1);
    cfg.povm.extract_n0 = integer(p, "extract_n0", cfg.povm.extract_n0);
    cfg.povm.extract_n1 = integer(p, "extract_n1", cfg.povm.extract_n1);
    cfg.povm.covariance_pairs = integer(p, "covariance_pairs", cfg.povm.covariance_pairs);
  }

  if (j.contains("frame")) {
    const auto& f = j.at("frame");
    cfg.frame.xi_lo = num(f, "xi_lo", cfg.frame.xi_lo);
    cfg.frame.xi_hi = num(f, "xi_hi", cfg.frame.xi_hi);
    cfg.frame.sigma_u = num(f, "sigma_u", cfg.frame.sigma_u);
    cfg.frame.weyl_halfwidth = num(f, "weyl_halfwidth", cfg.frame.weyl_halfwidth);
    cfg.frame.weyl_spacing = num(f, "weyl_spacing", cfg.frame.weyl_spacing);
  }

  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    cfg.tol.weyl_spectrum_rel = num(t, "weyl_spectrum_rel", cfg.tol.weyl_spectrum_rel);
    cfg.tol.affine_degree_rel = num(t, "affine_degree_rel", cfg.tol.affine_degree_rel);
    cfg.tol.commutation_weyl = num(t, "commutation_weyl", cfg.tol.commutation_weyl);
    cfg.tol.commutation_affine = num(t, "commutation_affine", cfg.tol.commutation_affine);
    cfg.tol.orthogonality_rel = num(t, "orthogonality_rel", cfg.tol.orthogonality_rel);
    cfg.tol.cell_psd = num(t, "cell_psd", cfg.tol.cell_psd);
    cfg.tol.normalization_interior =
        num(t, "normalization_interior", cfg.tol.normalization_interior);
    cfg.tol.covariance = num(t, "covariance", cfg.tol.covariance);
    cfg.tol.covariance_broken_factor =
        num(t, "covariance_broken_factor", cfg.tol.covariance_broken_factor);
    cfg.tol.measure_identity_rel = num(t, "measure_identity_rel", cfg.tol.measure_identity_rel);
    cfg.tol.translate_spread = num(t, "translate_spread", cfg.tol.translate_spread);
    cfg.tol.roundtrip_trace = num(t, "roundtrip_trace", cfg.tol.roundtrip_trace);
    cfg.tol.roundtrip_dispersion =
        num(t, "roundtrip_dispersion", cfg.tol.roundtrip_dispersion);
    cfg.tol.separation_factor = num(t, "separation_factor", cfg.tol.separation_factor);
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("seed must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("density")) cfg.density_spec = j.at("density").get<std::string>();

  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

} // namespace covq
