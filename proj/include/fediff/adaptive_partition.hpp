#pragma once

#include "fediff/gtsvd_fit.hpp"
#include "fediff/spectral_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace fediff {

/// Uniform samples of a noisy signal on the closed grid
/// x_i = a + i (b - a) / (M - 1), i = 0..M-1.
struct SignalRecord {
  double a = -1.0;
  double b = 1.0;
  std::vector<double> samples;
  /// Pointwise noise bound.
  double delta1 = 0.0;
};

/// One accepted subinterval of the recursive bisection.
struct PartitionLeaf {
  double a = 0.0;
  double b = 0.0;
  int depth = 0;
  /// Index of the leaf's first sample in the enclosing signal.
  std::int64_t offset = 0;
  /// Samples spanned, 2^(r - depth) (m - 1) + 1.
  std::int64_t nn = 0;
  LocalFit fit;
  /// Full-resolution residual ||y - refinedFE(0..nn-1)||.
  double residual = 0.0;
  /// Acceptance threshold rho * sqrt(nn/3) * delta1.
  double threshold = 0.0;
};

struct PartitionResult {
  /// Leaves ordered left to right, tiling the interval.
  std::vector<PartitionLeaf> leaves;
  /// The operators every leaf was fitted with.
  const PrecomputedOperators* operators = nullptr;
  /// Effective noise bound used (delta1 or the floor, whichever is larger).
  double delta_used = 0.0;
};

struct PartitionOptions {
  /// Lower bound for the noise level. Unset means
  /// 1e-12 * ||y||_2 / sqrt(M); zero disables the floor.
  std::optional<double> delta_floor;
};

/// Strided selection of m samples out of nn, keeping both endpoints.
/// Throws std::invalid_argument when (nn - 1) is not a multiple of (m - 1).
std::vector<double> downsample(std::span<const double> y, int m);

/// Acceptance rule: eps_res <= rho * sqrt(nn/3) * delta1, or nn <= m.
bool accept_test(double eps_res, std::int64_t nn, double delta1, double rho, int m);

/// Default noise floor 1e-12 * ||y||_2 / sqrt(size).
double default_delta_floor(std::span<const double> y);

/// Recursive bisection of [a, b]. `y` must hold 2^d (m - 1) + 1 samples for
/// some d >= 0. Every subinterval is downsampled to m nodes, fitted with
/// local_fourier_fit at delta_loc = delta1 * sqrt(m/3), re-expanded on the
/// periodic grid, interpolated back to full resolution and compared with
/// the samples; rejected subintervals are split at the middle sample,
/// which both halves share.
///
/// Throws std::invalid_argument on delta1 < 0, a < b violations or a
/// sample count that is not dyadic-compatible.
PartitionResult recursive_fit(double a, double b, std::span<const double> y, double delta1,
                              const PrecomputedOperators& ops,
                              const PartitionOptions& opts = {});

/// recursive_fit on a full signal; additionally checks that the sample
/// count equals M of the active configuration.
PartitionResult partition_signal(const SignalRecord& signal, const PrecomputedOperators& ops,
                                 const PartitionOptions& opts = {});

/// Writes one tab-separated line per leaf: a, b, depth, k_used, residual,
/// threshold.
void write_partition_trace(std::ostream& os, const PartitionResult& part);

struct TraceLine {
  double a = 0.0;
  double b = 0.0;
  int depth = 0;
  int k_used = 0;
  double residual = 0.0;
  double threshold = 0.0;
};

/// Parses the format produced by write_partition_trace.
/// Throws std::runtime_error on malformed lines.
std::vector<TraceLine> read_partition_trace(std::istream& is);

}  // namespace fediff
