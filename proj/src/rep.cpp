// SPDX-License-Identifier: Apache-2.0

#include "covq/rep.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include <Eigen/SVD>

namespace covq {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT, forward sign e^{-2 pi i j m / N}; inverse scales 1/N.
void fft_radix2(Vector& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a(i), a(j));
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / len;
    const Complex wl = std::polar(1.0, ang);
    for (int i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        const Complex u = a(i + j);
        const Complex v = a(i + j + len / 2) * w;
        a(i + j) = u + v;
        a(i + j + len / 2) = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) a /= static_cast<double>(n);
}

void dft_naive(Vector& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  Vector out = Vector::Zero(n);
  const double sgn = inverse ? 2.0 : -2.0;
  for (int m = 0; m < n; ++m) {
    Complex acc(0.0, 0.0);
    for (int j = 0; j < n; ++j)
      acc += a(j) * std::polar(1.0, sgn * kPi * j * m / n);
    out(m) = acc;
  }
  if (inverse) out /= static_cast<double>(n);
  a = out;
}

void fft(Vector& a, bool inverse) {
  if (is_pow2(static_cast<int>(a.size())))
    fft_radix2(a, inverse);
  else
    dft_naive(a, inverse);
}

// Cubic Lagrange coefficients on stencil {-1, 0, 1, 2} at t in [0, 1).
inline void cubic_coeffs(double t, double c[4]) {
  c[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
  c[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  c[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
  c[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
}

constexpr double kLatticeTol = 1e-9;

} // namespace

struct Representation::Cache {
  std::mutex mu;
  std::map<std::pair<long long, long long>, Matrix> unitaries;
  std::deque<std::pair<long long, long long>> order;
  static constexpr std::size_t kCapacity = 16;
};

Representation Representation::affine(int n_modes, double freq_max, int nodes_per_octave) {
  if (n_modes < 8) throw std::invalid_argument("affine rep needs n_modes >= 8");
  if (freq_max <= 0.0) throw std::invalid_argument("freq_max must be positive");
  if (nodes_per_octave < 1) throw std::invalid_argument("nodes_per_octave must be >= 1");
  Representation r;
  r.kind_ = RepKind::AffineWavelet;
  r.n_ = n_modes;
  r.du_ = std::log(2.0) / nodes_per_octave;
  const double umax = std::log(freq_max);
  r.u0_ = umax - (n_modes - 1) * r.du_;
  r.xi_.resize(n_modes);
  for (int k = 0; k < n_modes; ++k) r.xi_(k) = std::exp(r.u0_ + k * r.du_);
  r.cache_ = std::make_shared<Cache>();
  return r;
}

Representation Representation::affine_window(int n_modes, double freq_min, double freq_max) {
  if (n_modes < 8) throw std::invalid_argument("affine rep needs n_modes >= 8");
  if (!(0.0 < freq_min && freq_min < freq_max))
    throw std::invalid_argument("need 0 < freq_min < freq_max");
  Representation r;
  r.kind_ = RepKind::AffineWavelet;
  r.n_ = n_modes;
  r.u0_ = std::log(freq_min);
  r.du_ = (std::log(freq_max) - r.u0_) / (n_modes - 1);
  r.xi_.resize(n_modes);
  for (int k = 0; k < n_modes; ++k) r.xi_(k) = std::exp(r.u0_ + k * r.du_);
  r.cache_ = std::make_shared<Cache>();
  return r;
}

Representation Representation::weyl(int n_modes) {
  if (n_modes < 8) throw std::invalid_argument("weyl rep needs n_modes >= 8");
  Representation r;
  r.kind_ = RepKind::WeylHeisenberg;
  r.n_ = n_modes;
  r.dx_ = std::sqrt(kTwoPi / n_modes);
  r.x_.resize(n_modes);
  for (int j = 0; j < n_modes; ++j) r.x_(j) = (j - n_modes / 2) * r.dx_;
  r.cache_ = std::make_shared<Cache>();
  return r;
}

const RealVector& Representation::frequencies() const {
  if (kind_ != RepKind::AffineWavelet) throw std::logic_error("not an affine rep");
  return xi_;
}

double Representation::delta_u() const {
  if (kind_ != RepKind::AffineWavelet) throw std::logic_error("not an affine rep");
  return du_;
}

double Representation::u_min() const { return u0_; }
double Representation::u_max() const { return u0_ + (n_ - 1) * du_; }

double Representation::dx() const {
  if (kind_ != RepKind::WeylHeisenberg) throw std::logic_error("not a Weyl rep");
  return dx_;
}

double Representation::length() const { return n_ * dx(); }
double Representation::momentum_halfwidth() const { return kPi / dx(); }

const RealVector& Representation::positions() const {
  if (kind_ != RepKind::WeylHeisenberg) throw std::logic_error("not a Weyl rep");
  return x_;
}

ChartRegion Representation::torus_region() const {
  if (kind_ != RepKind::WeylHeisenberg) throw std::logic_error("not a Weyl rep");
  const double hq = 0.5 * length();
  const double hp = momentum_halfwidth();
  return ChartRegion{-hq, hq, -hp, hp};
}

bool Representation::on_dilation_lattice(const GroupElement& g, double tol) const {
  if (kind_ != RepKind::AffineWavelet) return true;
  const double tau = std::log(g.y) / du_;
  return std::abs(tau - std::llround(tau)) < tol;
}

GroupElement Representation::snap_dilation(const GroupElement& g) const {
  if (kind_ != RepKind::AffineWavelet) return g;
  const double tau = std::round(std::log(g.y) / du_);
  return GroupElement{g.x, std::exp(tau * du_)};
}

Vector Representation::apply_affine(double b, double a, const Vector& v) const {
  const double tau = std::log(a) / du_;
  const long long nearest = std::llround(tau);
  Vector out(n_);
  if (std::abs(tau - static_cast<double>(nearest)) < kLatticeTol) {
    // Exact lattice dilation: pure index shift with zero extension.
    for (int k = 0; k < n_; ++k) {
      const long long src = k + nearest;
      out(k) = (src >= 0 && src < n_)
                   ? std::polar(1.0, -b * xi_(k)) * v(src)
                   : Complex(0.0, 0.0);
    }
    return out;
  }
  const double fl = std::floor(tau);
  const double t = tau - fl;
  double c[4];
  cubic_coeffs(t, c);
  const long long base = static_cast<long long>(fl);
  for (int k = 0; k < n_; ++k) {
    Complex acc(0.0, 0.0);
    const long long i0 = k + base - 1;
    for (int m = 0; m < 4; ++m) {
      const long long src = i0 + m;
      if (src >= 0 && src < n_) acc += c[m] * v(src);
    }
    out(k) = std::polar(1.0, -b * xi_(k)) * acc;
  }
  return out;
}

Vector Representation::apply_weyl(double q, double p, const Vector& v) const {
  const double s = q / dx_;
  const long long si = std::llround(s);
  Vector shifted(n_);
  if (std::abs(s - static_cast<double>(si)) < kLatticeTol) {
    // Integer translation: exact circular shift.
    for (int j = 0; j < n_; ++j) {
      long long src = (j - si) % n_;
      if (src < 0) src += n_;
      shifted(j) = v(src);
    }
  } else {
    shifted = v;
    fft(shifted, false);
    const double base = kTwoPi / (n_ * dx_);
    for (int m = 0; m < n_; ++m) {
      const int ms = m < n_ / 2 ? m : m - n_;
      shifted(m) *= std::polar(1.0, -base * ms * q);
    }
    fft(shifted, true);
  }
  const Complex phase = std::polar(1.0, 0.5 * q * p);
  Vector out(n_);
  for (int j = 0; j < n_; ++j)
    out(j) = phase * std::polar(1.0, -p * x_(j)) * shifted(j);
  return out;
}

Vector Representation::apply(const GroupElement& g, const Vector& v) const {
  if (v.size() != n_) throw std::invalid_argument("vector dimension mismatch");
  return kind_ == RepKind::AffineWavelet ? apply_affine(g.x, g.y, v)
                                         : apply_weyl(g.x, g.y, v);
}

Vector Representation::apply_adjoint(const GroupElement& g, const Vector& v) const {
  // Exact adjoint of the implemented operator (factor order reversed), so
  // <U(g)x, y> = <x, U(g)* y> holds to rounding for every g. It agrees with
  // U(g^{-1}) on the faithful domain.
  if (v.size() != n_) throw std::invalid_argument("vector dimension mismatch");
  Vector out(n_);
  if (kind_ == RepKind::AffineWavelet) {
    const double tau = std::log(g.y) / du_;
    const long long nearest = std::llround(tau);
    if (std::abs(tau - static_cast<double>(nearest)) < kLatticeTol) {
      for (int j = 0; j < n_; ++j) {
        const long long src = j - nearest;
        out(j) = (src >= 0 && src < n_)
                     ? std::polar(1.0, g.x * xi_(src)) * v(src)
                     : Complex(0.0, 0.0);
      }
      return out;
    }
    const double fl = std::floor(tau);
    const double t = tau - fl;
    double c[4];
    cubic_coeffs(t, c);
    const long long base = static_cast<long long>(fl);
    for (int j = 0; j < n_; ++j) {
      Complex acc(0.0, 0.0);
      for (int m = 0; m < 4; ++m) {
        const long long src = j - base + 1 - m;
        if (src >= 0 && src < n_)
          acc += c[m] * std::polar(1.0, g.x * xi_(src)) * v(src);
      }
      out(j) = acc;
    }
    return out;
  }

  // Weyl: U = e^{iqp/2} Mod(p) Sh(q), so U* = e^{-iqp/2} Sh(-q) Mod(-p).
  const double q = g.x, p = g.y;
  Vector w(n_);
  const Complex phase = std::polar(1.0, -0.5 * q * p);
  for (int j = 0; j < n_; ++j)
    w(j) = phase * std::polar(1.0, p * x_(j)) * v(j);
  const double s = q / dx_;
  const long long si = std::llround(s);
  if (std::abs(s - static_cast<double>(si)) < kLatticeTol) {
    for (int j = 0; j < n_; ++j) {
      long long src = (j + si) % n_;
      if (src < 0) src += n_;
      out(j) = w(src);
    }
    return out;
  }
  fft(w, false);
  const double base = kTwoPi / (n_ * dx_);
  for (int m = 0; m < n_; ++m) {
    const int ms = m < n_ / 2 ? m : m - n_;
    w(m) *= std::polar(1.0, base * ms * q);
  }
  fft(w, true);
  return w;
}

Complex Representation::multiplier(const GroupElement& g, const GroupElement& h) const {
  if (kind_ == RepKind::AffineWavelet) return Complex(1.0, 0.0);
  return std::polar(1.0, -0.5 * (g.x * h.y - g.y * h.x));
}

Matrix Representation::unitary(const GroupElement& g) const {
  const auto key = std::make_pair(std::llround(g.x * 1e12), std::llround(g.y * 1e12));
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->unitaries.find(key);
    if (it != cache_->unitaries.end()) return it->second;
  }
  Matrix u(n_, n_);
  Vector e = Vector::Zero(n_);
  for (int c = 0; c < n_; ++c) {
    e(c) = 1.0;
    u.col(c) = apply(g, e);
    e(c) = 0.0;
  }
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (cache_->unitaries.size() >= Cache::kCapacity && !cache_->order.empty()) {
      cache_->unitaries.erase(cache_->order.front());
      cache_->order.pop_front();
    }
    if (cache_->unitaries.emplace(key, u).second) cache_->order.push_back(key);
  }
  return u;
}

Matrix Representation::beta(const GroupElement& g, const Matrix& t) const {
  if (t.rows() != n_ || t.cols() != n_)
    throw std::invalid_argument("operator dimension mismatch");
  Matrix ut(n_, n_);
  for (int c = 0; c < n_; ++c) ut.col(c) = apply(g, t.col(c));
  Matrix res(n_, n_);
  const Matrix uta = ut.adjoint();
  for (int c = 0; c < n_; ++c) res.col(c) = apply(g, uta.col(c));
  return res.adjoint();
}

Matrix Representation::beta_adjoint(const GroupElement& g, const Matrix& t) const {
  // beta(g)^*(T) = U(g)* T U(g); equal to beta(g^{-1})(T) since multiplier
  // phases cancel in conjugation. Built from the exact adjoint action.
  if (t.rows() != n_ || t.cols() != n_)
    throw std::invalid_argument("operator dimension mismatch");
  Matrix ut(n_, n_);
  for (int c = 0; c < n_; ++c) ut.col(c) = apply_adjoint(g, t.col(c));
  Matrix res(n_, n_);
  const Matrix uta = ut.adjoint();
  for (int c = 0; c < n_; ++c) res.col(c) = apply_adjoint(g, uta.col(c));
  return res.adjoint();
}

double Representation::unitarity_residual(const GroupElement& g) const {
  const Matrix u = unitary(g);
  const Matrix gram = u.adjoint() * u;

  std::vector<int> keep;
  keep.reserve(n_);
  if (kind_ == RepKind::AffineWavelet) {
    const double tau = std::log(g.y) / du_;
    const long long nearest = std::llround(tau);
    const bool lattice = std::abs(tau - static_cast<double>(nearest)) < kLatticeTol;
    const int margin = lattice ? 0 : 4;
    for (int k = 0; k < n_; ++k) {
      const double img = k - tau;
      if (img >= margin && img <= n_ - 1 - margin) keep.push_back(k);
    }
  } else {
    for (int k = 0; k < n_; ++k) keep.push_back(k);
  }
  if (keep.empty()) return 0.0;
  Matrix sub(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < keep.size(); ++j)
      sub(i, j) = gram(keep[i], keep[j]) - (i == j ? 1.0 : 0.0);
  return operator_norm(sub);
}

double Representation::unitarity_residual(const GroupElement& g, const Matrix& frame) const {
  if (frame.rows() != n_) throw std::invalid_argument("frame dimension mismatch");
  const Matrix u = unitary(g);
  const Matrix uq = u * frame;
  const Matrix gram = uq.adjoint() * uq;
  return operator_norm(gram - Matrix::Identity(frame.cols(), frame.cols()));
}

double Representation::truncation_loss(const GroupElement& g, const Vector& v) const {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) return 0.0;
  const double img = apply(g, v).squaredNorm();
  return std::max(0.0, 1.0 - img / n2);
}

Vector Representation::basis_state(int k) const {
  if (k < 0 || k >= n_) throw std::invalid_argument("basis index out of range");
  Vector v = Vector::Zero(n_);
  v(k) = 1.0;
  return v;
}

Vector Representation::gaussian_state() const {
  if (kind_ != RepKind::WeylHeisenberg) throw std::logic_error("not a Weyl rep");
  Vector v(n_);
  for (int j = 0; j < n_; ++j) v(j) = std::exp(-0.5 * x_(j) * x_(j));
  v /= v.norm();
  return v;
}

Vector Representation::log_bump(double u_center, double sigma_u) const {
  if (kind_ != RepKind::AffineWavelet) throw std::logic_error("not an affine rep");
  if (!(sigma_u > 0.0)) throw std::invalid_argument("sigma_u must be positive");
  Vector v(n_);
  for (int k = 0; k < n_; ++k) {
    const double d = (u0_ + k * du_ - u_center) / sigma_u;
    v(k) = std::exp(-0.5 * d * d);
  }
  v /= v.norm();
  return v;
}

Vector Representation::coherent_state(double q, double p) const {
  if (kind_ != RepKind::WeylHeisenberg) throw std::logic_error("not a Weyl rep");
  Vector v(n_);
  for (int j = 0; j < n_; ++j) {
    const double d = x_(j) - q;
    v(j) = std::polar(std::exp(-0.5 * d * d), -p * x_(j));
  }
  v /= v.norm();
  return v;
}

Vector Representation::reference_state() const {
  if (kind_ == RepKind::WeylHeisenberg) return gaussian_state();
  return log_bump(0.5 * (u_min() + u_max()), 0.45);
}

namespace {

Matrix orthonormalize_trim(const std::vector<Vector>& cols, int n, double rel_cut) {
  if (cols.empty()) throw std::invalid_argument("frame: empty family");
  Matrix m(n, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(c) = cols[c];
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cut = sv(0) * rel_cut;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  return svd.matrixU().leftCols(rank);
}

} // namespace

Matrix Representation::band_frame(double xi_lo, double xi_hi, double sigma_u,
                                  int modulations) const {
  if (kind_ != RepKind::AffineWavelet) throw std::logic_error("not an affine rep");
  if (!(0.0 < xi_lo && xi_lo < xi_hi)) throw std::invalid_argument("bad frequency band");
  const double lo = std::log(xi_lo), hi = std::log(xi_hi);
  // Mild overlap only: keeps singular values O(1), so the
  // orthonormalization cannot whiten edge junk into the retained span.
  const double spacing = 1.5 * sigma_u;
  const double mod_rate = 0.03 * kPi;  // phase per node; mild enough for cubic interp
  std::vector<Vector> cols;
  for (double u = lo; u <= hi + 1e-12; u += spacing) {
    const Vector bump = log_bump(u, sigma_u);
    for (int m = -modulations; m <= modulations; ++m) {
      Vector col(n_);
      for (int k = 0; k < n_; ++k)
        col(k) = bump(k) * std::polar(1.0, mod_rate * m * k);
      cols.push_back(col);
    }
  }
  return orthonormalize_trim(cols, n_, 0.05);
}

Matrix Representation::lattice_frame(double halfwidth, double spacing) const {
  if (kind_ != RepKind::WeylHeisenberg) throw std::logic_error("not a Weyl rep");
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  std::vector<Vector> cols;
  for (double q = -halfwidth; q <= halfwidth + 1e-12; q += spacing)
    for (double p = -halfwidth; p <= halfwidth + 1e-12; p += spacing)
      cols.push_back(coherent_state(q, p));
  return orthonormalize_trim(cols, n_, 0.05);
}

} // namespace covq
