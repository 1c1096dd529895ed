#pragma once

#include "fediff/spectral_core.hpp"

#include <Eigen/Core>

#include <span>

namespace fediff {

/// Result of one truncated-SVD local fit.
struct LocalFit {
  /// Coefficients in the weighted variable: TG * coef evaluates the fit.
  Eigen::VectorXcd coef;
  /// Real part of the fitted values at the m local nodes.
  Eigen::VectorXd ry;
  /// Truncation index (number of SVD terms used).
  int k_used = 0;
  /// Final discrete l2 residual between the fitted values and the data.
  double residual = 0.0;
};

/// Truncated SVD fit of m local samples.
///
/// Adds rank-one terms V(:,k) * (U(:,k)^H y / S(k)) in order of decreasing
/// singular value while the residual exceeds `delta_loc`, stopping after
/// min(m, 2n+1) terms at the latest. Exhausting all terms without reaching
/// `delta_loc` is not an error here; the caller decides whether to split.
///
/// Throws std::invalid_argument when y.size() != m or delta_loc < 0.
LocalFit local_fourier_fit(std::span<const double> y, double delta_loc,
                           const PrecomputedOperators& ops);

/// Residual ||G T_k y - y|| of the k-term truncated solution, computed by
/// projection onto the leading k left singular vectors. k = 0 gives ||y||.
double truncated_residual(std::span<const double> y, int k, const PrecomputedOperators& ops);

/// Checks the discrepancy bracket residual(k) <= delta_loc < residual(k-1)
/// for a fit returned by local_fourier_fit. Fits that never iterated or
/// that used every available term pass trivially.
bool discrepancy_bracket_check(const LocalFit& fit, std::span<const double> y,
                               double delta_loc, const PrecomputedOperators& ops);

}  // namespace fediff
