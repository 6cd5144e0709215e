// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_ERRORS_HPP
#define COVQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace covq {

/// The quadrature window left too much integrand mass on its boundary; the
/// result would be dominated by truncation rather than discretization.
struct TruncationDominatedError : std::runtime_error {
  explicit TruncationDominatedError(const std::string& what) : std::runtime_error(what) {}
};

/// Extraction found cell densities that disagree beyond tolerance; the
/// observable is not covariant (or not generated by any single density).
struct NotCovariantError : std::runtime_error {
  explicit NotCovariantError(const std::string& what) : std::runtime_error(what) {}
};

/// Spectral mass below the C^{-1} regularization floor where finiteness was
/// required.
struct OutsideDomainError : std::runtime_error {
  explicit OutsideDomainError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace covq

#endif
