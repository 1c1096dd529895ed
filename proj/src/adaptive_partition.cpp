#include "fediff/adaptive_partition.hpp"

#include "fediff/csv_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fediff {

namespace {

// Returns log2((nn - 1) / (m - 1)), or -1 if nn is not of the form
// 2^d (m - 1) + 1.
int dyadic_level(std::int64_t nn, int m) {
  if (nn < m || (nn - 1) % (m - 1) != 0) return -1;
  std::int64_t ratio = (nn - 1) / (m - 1);
  int level = 0;
  while (ratio > 1) {
    if (ratio % 2 != 0) return -1;
    ratio /= 2;
    ++level;
  }
  return level;
}

struct Recursion {
  const PrecomputedOperators& ops;
  double delta1;
  std::vector<PartitionLeaf>& out;

  void run(double a, double b, std::span<const double> y, int depth, std::int64_t offset) {
    const auto& cfg = ops.config();
    const auto nn = static_cast<std::int64_t>(y.size());
    const int r_ds = static_cast<int>((nn - 1) / (cfg.m - 1));

    const std::vector<double> reduced = downsample(y, cfg.m);
    const double delta_loc = delta1 * std::sqrt(cfg.m / 3.0);
    LocalFit fit = local_fourier_fit(reduced, delta_loc, ops);

    const Eigen::VectorXd fe = (ops.TG() * fit.coef).real();
    const std::vector<double> refined =
        trig_upsample(std::span<const double>(fe.data(), static_cast<std::size_t>(fe.size())), r_ds);
    double sq = 0.0;
    for (std::int64_t i = 0; i < nn; ++i) {
      const double d = y[static_cast<std::size_t>(i)] - refined[static_cast<std::size_t>(i)];
      sq += d * d;
    }
    const double eps_res = std::sqrt(sq);
    const double threshold = cfg.rho * std::sqrt(static_cast<double>(nn) / 3.0) * delta1;

    if (accept_test(eps_res, nn, delta1, cfg.rho, cfg.m)) {
      out.push_back(PartitionLeaf{a, b, depth, offset, nn, std::move(fit), eps_res, threshold});
      return;
    }
    const std::int64_t mid = (nn - 1) / 2;
    const double c = 0.5 * (a + b);
    run(a, c, y.subspan(0, static_cast<std::size_t>(mid + 1)), depth + 1, offset);
    run(c, b, y.subspan(static_cast<std::size_t>(mid)), depth + 1, offset + mid);
  }
};

}  // namespace

std::vector<double> downsample(std::span<const double> y, int m) {
  const auto nn = static_cast<std::int64_t>(y.size());
  if (m < 2 || nn < m || (nn - 1) % (m - 1) != 0)
    throw std::invalid_argument("cannot downsample " + std::to_string(nn) + " samples to " +
                                std::to_string(m) + " nodes: (nn-1) must be a multiple of (m-1)");
  const std::int64_t stride = (nn - 1) / (m - 1);
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i * stride)];
  return out;
}

bool accept_test(double eps_res, std::int64_t nn, double delta1, double rho, int m) {
  return eps_res <= rho * std::sqrt(static_cast<double>(nn) / 3.0) * delta1 || nn <= m;
}

double default_delta_floor(std::span<const double> y) {
  if (y.empty()) return 0.0;
  double sq = 0.0;
  for (double v : y) sq += v * v;
  return 1e-12 * std::sqrt(sq) / std::sqrt(static_cast<double>(y.size()));
}

PartitionResult recursive_fit(double a, double b, std::span<const double> y, double delta1,
                              const PrecomputedOperators& ops, const PartitionOptions& opts) {
  if (!(delta1 >= 0.0)) throw std::invalid_argument("noise bound delta1 must be >= 0");
  if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
  const auto nn = static_cast<std::int64_t>(y.size());
  if (dyadic_level(nn, ops.config().m) < 0)
    throw std::invalid_argument("sample count " + std::to_string(nn) +
                                " is not of the form 2^d (m-1) + 1 with m = " +
                                std::to_string(ops.config().m));

  const double floor = opts.delta_floor.value_or(default_delta_floor(y));
  PartitionResult result;
  result.operators = &ops;
  result.delta_used = std::max(delta1, floor);
  Recursion rec{ops, result.delta_used, result.leaves};
  rec.run(a, b, y, 0, 0);
  return result;
}

PartitionResult partition_signal(const SignalRecord& signal, const PrecomputedOperators& ops,
                                 const PartitionOptions& opts) {
  const auto M = ops.config().M;
  if (static_cast<std::int64_t>(signal.samples.size()) != M)
    throw std::invalid_argument("signal has " + std::to_string(signal.samples.size()) +
                                " samples but the configuration requires M = " + std::to_string(M));
  return recursive_fit(signal.a, signal.b, signal.samples, signal.delta1, ops, opts);
}

void write_partition_trace(std::ostream& os, const PartitionResult& part) {
  for (const auto& leaf : part.leaves) {
    os << format_double(leaf.a) << '\t' << format_double(leaf.b) << '\t' << leaf.depth << '\t'
       << leaf.fit.k_used << '\t' << format_double(leaf.residual) << '\t'
       << format_double(leaf.threshold) << '\n';
  }
}

std::vector<TraceLine> read_partition_trace(std::istream& is) {
  std::vector<TraceLine> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    TraceLine t;
    if (!(ss >> t.a >> t.b >> t.depth >> t.k_used >> t.residual >> t.threshold))
      throw std::runtime_error("malformed partition trace line " + std::to_string(lineno));
    lines.push_back(t);
  }
  return lines;
}

}  // namespace fediff
