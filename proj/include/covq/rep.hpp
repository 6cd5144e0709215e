// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_REP_HPP
#define COVQ_REP_HPP

#include <memory>
#include <mutex>
#include <map>
#include <vector>

#include "covq/group.hpp"
#include "covq/types.hpp"

namespace covq {

enum class RepKind { AffineWavelet, WeylHeisenberg };

/// Projective unitary representation on the truncated space.
///
/// Affine: the wavelet representation realized on L^2(R_+, dxi) in frequency
/// coordinates, sampled on a log-spaced grid xi_k = xi_max * 2^{(k-N+1)/s}
/// with s nodes per octave. Coordinates are d_k = sqrt(xi_k dxi) phi(xi_k),
/// so (U(b,a)phi)(xi) = sqrt(a) e^{-i b xi} phi(a xi) becomes a diagonal
/// phase times a shift of the coordinate sequence by log(a)/delta_u.
/// Dilations on the lattice a = 2^{m/s} are exact index shifts with zero
/// extension; off-lattice dilations use cubic interpolation and their
/// residual is reported per element.
///
/// Weyl-Heisenberg: N-point periodic position grid x_j = (j - N/2) dx with
/// dx = sqrt(2 pi / N). (U(q,p)f)(x) = e^{i q p / 2} e^{-i p x} f(x - q),
/// translation via exact FFT fractional shift. The effective phase space is
/// the torus q in [-L/2, L/2], p in [-pi/dx, pi/dx].
class Representation {
 public:
  static Representation affine(int n_modes = 128, double freq_max = 16.0,
                               int nodes_per_octave = 24);
  static Representation affine_window(int n_modes, double freq_min, double freq_max);
  static Representation weyl(int n_modes = 128);

  RepKind kind() const { return kind_; }
  GroupKind group_kind() const {
    return kind_ == RepKind::AffineWavelet ? GroupKind::Affine : GroupKind::PhaseSpaceR2;
  }
  int dim() const { return n_; }

  Vector apply(const GroupElement& g, const Vector& v) const;
  Vector apply_adjoint(const GroupElement& g, const Vector& v) const;

  Complex multiplier(const GroupElement& g, const GroupElement& h) const;

  /// Dense matrix of U(g); cached, keyed by quantized chart coordinates.
  Matrix unitary(const GroupElement& g) const;

  Matrix beta(const GroupElement& g, const Matrix& t) const;          // U T U*
  Matrix beta_adjoint(const GroupElement& g, const Matrix& t) const;  // U* T U

  /// || U(g)* U(g) - I ||_2 restricted to modes that stay inside the
  /// window under g (exact-shift paths give ~1e-15; interpolation shows up
  /// here). Mass pushed outside the window is reported separately.
  double unitarity_residual(const GroupElement& g) const;

  /// Same defect measured on a smooth subspace: || Q*(U*U)Q - I ||_2 for an
  /// orthonormal frame Q. This is the interpolation tolerance that matters
  /// for vectors the truncation represents faithfully.
  double unitarity_residual(const GroupElement& g, const Matrix& frame) const;

  /// Fraction of ||v||^2 lost to the window truncation under U(g).
  double truncation_loss(const GroupElement& g, const Vector& v) const;

  // --- affine grid data ---
  const RealVector& frequencies() const;
  double delta_u() const;
  double u_min() const;
  double u_max() const;
  bool on_dilation_lattice(const GroupElement& g, double tol = 1e-9) const;
  /// Nearest group element whose dilation is an exact grid shift.
  GroupElement snap_dilation(const GroupElement& g) const;

  // --- Weyl grid data ---
  double dx() const;
  double length() const;             // L = N dx
  double momentum_halfwidth() const; // pi / dx
  const RealVector& positions() const;

  /// Natural truncated chart region: affine callers configure theirs; for
  /// Weyl this is the full torus (one period in q, one Brillouin zone in p).
  ChartRegion torus_region() const;

  // --- reference states (unit norm) ---
  Vector basis_state(int k) const;
  Vector gaussian_state() const;                        // Weyl ground state
  Vector log_bump(double u_center, double sigma_u) const;  // affine
  Vector coherent_state(double q, double p) const;         // Weyl
  /// Kind-appropriate default admissible vector.
  Vector reference_state() const;

  /// Orthonormal basis of a smooth subspace over a frequency band: log
  /// bumps of width sigma_u centered at spacing 1.2 sigma_u across
  /// [xi_lo, xi_hi], together with mildly modulated copies. Directions with
  /// singular value below 5% of the largest are trimmed so every retained
  /// direction is genuinely smooth on the grid. Affine only.
  Matrix band_frame(double xi_lo, double xi_hi, double sigma_u = 0.35,
                    int modulations = 1) const;

  /// Orthonormal basis spanned by coherent states on a square lattice of
  /// the given spacing inside |q|, |p| <= halfwidth. Weyl only.
  Matrix lattice_frame(double halfwidth, double spacing) const;

 private:
  Representation() = default;

  Vector apply_affine(double b, double a, const Vector& v) const;
  Vector apply_weyl(double q, double p, const Vector& v) const;

  RepKind kind_ = RepKind::AffineWavelet;
  int n_ = 0;

  // affine
  RealVector xi_;
  double u0_ = 0.0;
  double du_ = 0.0;

  // weyl
  RealVector x_;
  double dx_ = 0.0;

  struct Cache;
  std::shared_ptr<Cache> cache_;
};

} // namespace covq

#endif
