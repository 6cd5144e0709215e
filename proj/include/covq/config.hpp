// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_CONFIG_HPP
#define COVQ_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include "covq/group.hpp"
#include "covq/rep.hpp"

#include <json.hpp>

namespace covq {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Residual gates used by the verification suites. Defaults are the pinned
/// acceptance values; --tolerance-scale multiplies the residual bounds
/// (never the structural factors).
struct Tolerances {
  double weyl_spectrum_rel = 1e-3;
  double affine_degree_rel = 1e-3;
  double commutation_weyl = 1e-6;
  double commutation_affine = 1e-3;
  double orthogonality_rel = 5e-3;
  double cell_psd = 1e-8;
  double normalization_interior = 1e-2;
  double covariance = 5e-3;
  double covariance_broken_factor = 10.0;
  double measure_identity_rel = 1e-2;
  double translate_spread = 1e-3;
  double roundtrip_trace = 1e-2;
  double roundtrip_dispersion = 1e-2;
  double separation_factor = 0.9;

  void scale(double s);
};

struct DufloConfig {
  double b_halfwidth = 10.0;
  double log_a_lo = -4.0;
  double log_a_hi = 3.5;
  int panels_b = 45;
  int panels_a = 30;
  int gl_order = 8;
  double probe_xi_lo = 0.55;
  double probe_xi_hi = 8.0;
  double probe_sigma = 0.2;
  int probe_spacing = 4;
  double floor_rel = 1e-6;
  double boundary_threshold = 5e-3;
  int commutation_samples = 50;
  int orthogonality_pairs = 10;
};

struct PovmConfig {
  int partition0 = 16;
  int partition1 = 12;
  int build_order = 4;
  ChartRegion identity_region{-4.0, 4.0, -0.9, 0.9};
  int identity_n0 = 8;
  int identity_n1 = 5;
  ChartRegion extract_region{-1.5, 1.5, -0.45, 0.45};
  int extract_n0 = 24;
  int extract_n1 = 9;
  int covariance_pairs = 20;
};

struct FrameConfig {
  double xi_lo = 1.4;
  double xi_hi = 6.0;
  double sigma_u = 0.35;
  double weyl_halfwidth = 3.0;
  double weyl_spacing = 1.5;
};

struct RunConfig {
  GroupKind group_kind = GroupKind::Affine;
  int n_modes = 128;
  double freq_max = 16.0;
  int nodes_per_octave = 24;
  ChartRegion region{-8.0, 8.0, -3.0, 3.0};
  bool region_given = false;  // Weyl defaults to the full torus otherwise
  int quad_order = 4;
  QuadratureRule quad_rule = QuadratureRule::Midpoint;
  int max_quad_order = 64;

  DufloConfig duflo;
  PovmConfig povm;
  FrameConfig frame;
  Tolerances tol;

  std::uint64_t seed = 20260808ULL;
  std::string density_spec = "default";

  Representation make_rep() const;
  ChartRegion effective_region(const Representation& rep) const;
};

/// Parses the JSON config block; absent keys keep their defaults, malformed
/// values raise ConfigError. Recognized keys follow the documented schema
/// (group.kind, region.b, region.log_a / region.q, region.p, quad.order,
/// rep.*, duflo.*, povm.*, frame.*, tolerances.*, seed).
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

} // namespace covq

#endif
