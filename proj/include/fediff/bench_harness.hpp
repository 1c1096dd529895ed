#pragma once

#include "fediff/adaptive_partition.hpp"
#include "fediff/baseline_m2.hpp"
#include "fediff/spectral_core.hpp"
#include "fediff/test_functions.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fediff {

enum class Method { m1, m2 };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

/// values + u_i with u_i i.i.d. uniform on [-delta1, delta1], drawn from a
/// 64-bit Mersenne Twister seeded with `seed`. Output depends only on the
/// inputs, not on the standard library's distribution implementation.
std::vector<double> add_noise(std::span<const double> values, double delta1, std::uint64_t seed);

/// RMS(approx - exact) / RMS(exact).
/// Throws std::invalid_argument on length mismatch or exact == 0.
double relative_error(std::span<const double> approx, std::span<const double> exact);

/// Median of a non-empty sample.
double median(std::vector<double> values);

struct BenchSpec {
  std::vector<FunctionId> functions;
  std::vector<Method> methods{Method::m1};
  std::vector<double> deltas;
  std::vector<std::uint64_t> seeds{1};
  double a = -1.0;
  double b = 1.0;
  SpectralConfig config = build_config(9, 1.0, 6.0, 6, 2.0);
  /// Baseline discrepancy constant.
  double m2_C = 1.1;
  std::optional<double> delta_floor;
};

struct BenchRecord {
  FunctionId function = FunctionId::f1;
  Method method = Method::m1;
  double delta1 = 0.0;
  std::uint64_t seed = 0;
  double re = 0.0;
  /// Number of accepted leaves (m1 only, 0 for m2).
  int leaf_count = 0;
  /// Selected regularization parameter (m2 only, 0 for m1).
  double alpha = 0.0;
  double wall_time_ms = 0.0;
};

/// Output of one benchmark cell.
struct CellResult {
  BenchRecord record;
  std::vector<double> x;
  std::vector<double> dfdx;
  std::vector<double> exact;
  /// m1 only.
  std::optional<PartitionResult> partition;
};

/// Shared state of a sweep: operators and baseline design are built once.
class BenchContext {
public:
  BenchContext(const SpectralConfig& cfg, double a, double b, double m2_C = 1.1,
               std::optional<double> delta_floor = std::nullopt);

  const SpectralConfig& config() const { return ops_.config(); }
  const PrecomputedOperators& operators() const { return ops_; }
  const M2Solver& m2_solver() const;
  double a() const { return a_; }
  double b() const { return b_; }

  CellResult run_cell(FunctionId fn, Method method, double delta1, std::uint64_t seed) const;

private:
  PrecomputedOperators ops_;
  double a_, b_;
  double m2_C_;
  std::optional<double> delta_floor_;
  mutable std::optional<M2Solver> m2_;
};

/// Runs every (function, method, delta, seed) cell. When `outdir` is set,
/// writes summary.csv, timings.csv, manifest.json, cells/<cell>.csv
/// (x, dfdx, exact, error) and cells/<cell>.trace.tsv for m1.
/// Throws std::invalid_argument on an empty sweep.
std::vector<BenchRecord> run_benchmark(const BenchSpec& spec,
                                       const std::optional<std::filesystem::path>& outdir);

/// File stem for a cell, e.g. "f1_m1_d0.01_s1".
std::string cell_name(const BenchRecord& r);

/// Writes function,method,delta1,seed,re,leaf_count,alpha. Contains no
/// timing data, so identical sweeps produce identical files.
void write_summary_csv(const std::filesystem::path& file, const std::vector<BenchRecord>& records);

/// Writes the figure-panel data files under outdir/plot from the records
/// and the cell files produced by run_benchmark:
///   re_<fn>.tsv                      median RE per (method, delta1)
///   deriv_<fn>_d<delta>.tsv          x, exact and each method's derivative
///                                    (lowest seed)
///   error_<cell>.tsv                 pointwise |error| rows and, for m1,
///                                    one row per interior leaf boundary
/// Throws std::invalid_argument on an empty record list and
/// std::runtime_error naming the file on I/O failures.
void emit_plotdata(const std::vector<BenchRecord>& records, const std::filesystem::path& outdir);

}  // namespace fediff
