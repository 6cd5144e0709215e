// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "covq/group.hpp"
#include "covq/linops.hpp"
#include "covq/rep.hpp"
#include "test_util.hpp"

using namespace covq;

namespace {

// Random affine element with a lattice dilation, where the truncated rep is
// an exact shift.
GroupElement lattice_affine(const Representation& rep, test::Rng& rng, int max_shift = 24) {
  const int shift = static_cast<int>(rng.uniform(-max_shift, max_shift + 1));
  return GroupElement{rng.uniform(-4.0, 4.0), std::exp(shift * rep.delta_u())};
}

// Element of the doubly-discrete Heisenberg lattice q, p in dx Z, where the
// N-point torus model satisfies the projective relations exactly for all
// vectors (the dual momentum lattice spacing equals dx since N dx^2 = 2 pi).
GroupElement lattice_weyl(const Representation& rep, test::Rng& rng, double span = 4.0) {
  const int steps = static_cast<int>(span / rep.dx());
  const int s = static_cast<int>(rng.uniform(-steps, steps + 1));
  const int t = static_cast<int>(rng.uniform(-steps, steps + 1));
  return GroupElement{s * rep.dx(), t * rep.dx()};
}

// Interior log bump: support stays inside the frequency window under index
// shifts up to the stated margin, so truncated tails are ~1e-15.
Vector interior_bump(const Representation& rep) {
  return rep.log_bump(0.5 * (rep.u_min() + rep.u_max()), 0.25);
}

} // namespace

TEST_SUITE_BEGIN("rep");

TEST_CASE("affine grid geometry") {
  const auto rep = Representation::affine();
  CHECK(rep.dim() == 128);
  const auto& xi = rep.frequencies();
  CHECK(xi(127) == doctest::Approx(16.0));
  CHECK(xi(103) == doctest::Approx(8.0));  // one octave = 24 nodes
  for (int k = 1; k < 128; ++k)
    CHECK(xi(k) / xi(k - 1) == doctest::Approx(std::pow(2.0, 1.0 / 24.0)));
}

TEST_CASE("U(e) is the identity") {
  test::Rng rng(31);
  for (auto rep : {Representation::affine(), Representation::weyl()}) {
    const GroupElement e = rep.group_kind() == GroupKind::Affine
                               ? GroupElement{0.0, 1.0}
                               : GroupElement{0.0, 0.0};
    const Vector v = rng.cgauss_vector(rep.dim());
    CHECK((rep.apply(e, v) - v).norm() <= 1e-14 * v.norm());
  }
}

TEST_CASE("unitarity on the faithful domain") {
  test::Rng rng(32);
  const auto rep = Representation::affine();

  // Lattice dilations: exact isometry on vectors that stay in the window.
  const Vector bump = rep.log_bump(0.9, 0.3);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = lattice_affine(rep, rng, 20);
    const double loss = rep.truncation_loss(g, bump);
    if (loss < 1e-12)
      CHECK(rep.apply(g, bump).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Off-lattice dilations interpolate; smooth vectors lose little.
  for (int trial = 0; trial < 10; ++trial) {
    const GroupElement g{rng.uniform(-3, 3), std::exp(rng.uniform(-0.4, 0.4))};
    CHECK(rep.apply(g, bump).norm() == doctest::Approx(1.0).epsilon(1e-4));
  }

  // Weyl translations/modulations are exactly unitary for every g.
  const auto wrep = Representation::weyl();
  const Vector v = rng.cgauss_vector(wrep.dim());
  for (int trial = 0; trial < 25; ++trial) {
    const GroupElement g{rng.uniform(-6, 6), rng.uniform(-6, 6)};
    CHECK(wrep.apply(g, v).norm() == doctest::Approx(v.norm()).epsilon(1e-12));
  }
}

TEST_CASE("unitarity residual report") {
  const auto rep = Representation::affine();
  CHECK(rep.unitarity_residual(GroupElement{1.5, std::exp(12 * rep.delta_u())}) < 1e-12);

  // Off-lattice dilations interpolate. On rough (near-Nyquist) vectors the
  // defect is order one and is reported as such; on the smooth interior
  // subspace it is tiny.
  const GroupElement off{0.3, 1.31};
  const double full = rep.unitarity_residual(off);
  CHECK(full > 1e-3);
  CHECK(full <= 1.0);
  const Matrix frame = rep.band_frame(1.9, 3.5, 0.3);
  CHECK(rep.unitarity_residual(off, frame) < 1e-3);

  const auto wrep = Representation::weyl();
  CHECK(wrep.unitarity_residual(GroupElement{0.37, 1.23}) < 1e-12);
}

TEST_CASE("projective relation U(gh) = m(g,h) U(g) U(h)") {
  test::Rng rng(33);

  const auto arep = Representation::affine();
  Group ag(GroupKind::Affine);
  const Vector smooth = interior_bump(arep);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = lattice_affine(arep, rng, 6);
    const auto h = lattice_affine(arep, rng, 6);
    CHECK(std::abs(arep.multiplier(g, h) - Complex(1.0, 0.0)) < 1e-15);
    const Vector lhs = arep.apply(ag.compose(g, h), smooth);
    const Vector rhs = arep.multiplier(g, h) * arep.apply(g, arep.apply(h, smooth));
    CHECK((lhs - rhs).norm() <= 1e-9);
  }

  const auto wrep = Representation::weyl();
  Group wg(GroupKind::PhaseSpaceR2);
  test::Rng vrng(133);
  const Vector any = vrng.cgauss_vector(wrep.dim());
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = lattice_weyl(wrep, rng);
    const auto h = lattice_weyl(wrep, rng);
    const Vector lhs = wrep.apply(wg.compose(g, h), any);
    const Vector rhs = wrep.multiplier(g, h) * wrep.apply(g, wrep.apply(h, any));
    CHECK((lhs - rhs).norm() <= 1e-10 * any.norm());
  }

  // Off the Heisenberg lattice the relation holds to Gaussian tail accuracy
  // on states away from the torus seam.
  const Vector ground = wrep.gaussian_state();
  for (int trial = 0; trial < 10; ++trial) {
    const GroupElement g{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const GroupElement h{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const Vector lhs = wrep.apply(wg.compose(g, h), ground);
    const Vector rhs = wrep.multiplier(g, h) * wrep.apply(g, wrep.apply(h, ground));
    CHECK((lhs - rhs).norm() <= 1e-7);
  }

  // multiplier normalization and cocycle identity
  const GroupElement e{0.0, 0.0};
  for (int trial = 0; trial < 50; ++trial) {
    const GroupElement g{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const GroupElement h{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const GroupElement k{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    CHECK(std::abs(wrep.multiplier(e, g) - Complex(1, 0)) < 1e-15);
    CHECK(std::abs(wrep.multiplier(g, e) - Complex(1, 0)) < 1e-15);
    const Complex lhs = wrep.multiplier(g, h) * wrep.multiplier(wg.compose(g, h), k);
    const Complex rhs = wrep.multiplier(g, wg.compose(h, k)) * wrep.multiplier(h, k);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("weyl torus periodicity") {
  const auto rep = Representation::weyl();
  test::Rng rng(34);
  const Vector v = rng.cgauss_vector(rep.dim());
  const double L = rep.length();
  const double p = 1.7;
  const Vector a = rep.apply(GroupElement{2.0 + L, p}, v);
  const Vector b = std::polar(1.0, 0.5 * L * p) * rep.apply(GroupElement{2.0, p}, v);
  CHECK((a - b).norm() <= 1e-10 * v.norm());
}

TEST_CASE("beta is the conjugation action") {
  test::Rng rng(35);
  for (auto rep : {Representation::affine(), Representation::weyl()}) {
    Group grp(rep.group_kind());
    const int n = rep.dim();
    const Matrix t = rng.random_psd(n);

    const GroupElement e = grp.identity();
    CHECK((rep.beta(e, t) - t).norm() <= 1e-13 * t.norm());

    const GroupElement g = rep.group_kind() == GroupKind::Affine
                               ? lattice_affine(rep, rng, 8)
                               : GroupElement{rng.uniform(-3, 3), rng.uniform(-3, 3)};

    // Matches the dense conjugation.
    const Matrix u = rep.unitary(g);
    CHECK((rep.beta(g, t) - u * t * u.adjoint()).norm() <= 1e-11 * t.norm());

    // Trace preserved up to window truncation (exact for Weyl).
    if (rep.group_kind() == GroupKind::PhaseSpaceR2) {
      CHECK(trace(rep.beta(g, t)).real() == doctest::Approx(trace(t).real()).epsilon(1e-12));
      CHECK(min_eigenvalue(rep.beta(g, t)) >= -1e-10);
    }
  }
}

TEST_CASE("beta is a homomorphism (multiplier phases cancel)") {
  test::Rng rng(36);

  const auto wrep = Representation::weyl();
  Group wg(GroupKind::PhaseSpaceR2);
  const Matrix s = rng.random_density(wrep.dim());
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = lattice_weyl(wrep, rng);
    const auto h = lattice_weyl(wrep, rng);
    const Matrix lhs = wrep.beta(g, wrep.beta(h, s));
    const Matrix rhs = wrep.beta(wg.compose(g, h), s);
    CHECK((lhs - rhs).norm() <= 1e-10 * s.norm());
  }

  const auto arep = Representation::affine();
  Group ag(GroupKind::Affine);
  const Vector bump = interior_bump(arep);
  const Matrix sb = bump * bump.adjoint();
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = lattice_affine(arep, rng, 6);
    const auto h = lattice_affine(arep, rng, 6);
    const Matrix lhs = arep.beta(g, arep.beta(h, sb));
    const Matrix rhs = arep.beta(ag.compose(g, h), sb);
    CHECK((lhs - rhs).norm() <= 1e-9);
  }
}

TEST_CASE("adjoint application inverts the action") {
  test::Rng rng(37);
  const auto arep = Representation::affine();
  const Vector bump = interior_bump(arep);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = lattice_affine(arep, rng, 6);
    CHECK((arep.apply_adjoint(g, arep.apply(g, bump)) - bump).norm() <= 1e-10);
  }

  const auto wrep = Representation::weyl();
  const Vector v = rng.cgauss_vector(wrep.dim());
  for (int trial = 0; trial < 10; ++trial) {
    const GroupElement g{rng.uniform(-4, 4), rng.uniform(-4, 4)};
    CHECK((wrep.apply_adjoint(g, wrep.apply(g, v)) - v).norm() <= 1e-11 * v.norm());
    // <U g x, y> = <x, U* y>
    const Vector y = rng.cgauss_vector(wrep.dim());
    const Complex a = wrep.apply(g, v).dot(y);
    const Complex b = v.dot(wrep.apply_adjoint(g, y));
    CHECK(std::abs(a - b) <= 1e-11 * std::abs(a));
  }
}

TEST_CASE("truncation flags large dilations") {
  const auto rep = Representation::affine();
  const Vector bump = rep.log_bump(0.9, 0.3);
  CHECK(rep.truncation_loss(GroupElement{0, std::exp(3.0)}, bump) > 0.5);
  CHECK(rep.truncation_loss(GroupElement{0, std::exp(0.1)}, bump) < 1e-5);
}

TEST_CASE("smooth frames are orthonormal") {
  const auto arep = Representation::affine();
  const Matrix q = arep.band_frame(1.2, 4.0, 0.35);
  CHECK(q.cols() >= 6);
  CHECK((q.adjoint() * q - Matrix::Identity(q.cols(), q.cols())).norm() < 1e-10);

  const auto wrep = Representation::weyl();
  const Matrix qw = wrep.lattice_frame(3.0, 1.5);
  CHECK(qw.cols() >= 8);
  CHECK((qw.adjoint() * qw - Matrix::Identity(qw.cols(), qw.cols())).norm() < 1e-10);
}

TEST_SUITE_END();
