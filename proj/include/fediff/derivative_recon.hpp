#pragma once

#include "fediff/adaptive_partition.hpp"
#include "fediff/spectral_core.hpp"

#include <optional>
#include <vector>

namespace fediff {

struct DerivativeResult {
  /// Global uniform grid, M nodes.
  std::vector<double> x;
  /// Derivative approximation of order `order` on x.
  std::vector<double> dvalues;
  /// Denoised function values, when requested.
  std::optional<std::vector<double>> fvalues;
  std::vector<PartitionLeaf> leaves;
  int order = 1;
};

/// First derivative from an accepted partition. Each leaf's coefficients
/// are mapped through dTG, scaled by 1/(b_j - a_j), interpolated to the
/// leaf's resolution and concatenated. Each leaf contributes all of its
/// samples except the last, so a joint takes the value of the leaf starting
/// there; the global right endpoint comes from the last leaf.
///
/// Throws std::invalid_argument when the partition does not tile [a, b] on
/// the dyadic grid of the configuration, or was fitted with operators of a
/// different configuration.
DerivativeResult reconstruct_derivative(const PartitionResult& part,
                                        const PrecomputedOperators& ops, double a, double b);

/// Derivative of order q >= 1 (diag((i l * span)^q) and scale 1/(b_j - a_j)^q).
/// q = 1 reproduces reconstruct_derivative bit for bit.
/// Throws std::invalid_argument when q < 1 or q > max_order.
DerivativeResult reconstruct_derivative_order(const PartitionResult& part,
                                              const PrecomputedOperators& ops, double a, double b,
                                              int q, int max_order = 4);

/// Denoised function on the global grid (TG in place of dTG, no scaling).
std::vector<double> reconstruct_function(const PartitionResult& part,
                                         const PrecomputedOperators& ops, double a, double b);

}  // namespace fediff
