#include "fediff/derivative_recon.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fediff {

namespace {

void validate(const PartitionResult& part, const PrecomputedOperators& ops, double a, double b) {
  const auto& cfg = ops.config();
  if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
  if (part.leaves.empty()) throw std::invalid_argument("partition has no leaves");
  if (part.operators != nullptr && part.operators != &ops &&
      !(part.operators->config() == cfg))
    throw std::invalid_argument("partition was fitted with operators of another configuration");

  const double width = b - a;
  const double tol = 1e-12 * std::max(1.0, std::abs(a) + std::abs(b));
  std::int64_t expected_offset = 0;
  double expected_a = a;
  for (const auto& leaf : part.leaves) {
    if (leaf.depth < 0 || leaf.depth > cfg.r)
      throw std::invalid_argument("leaf depth out of range");
    const double leaf_width = width / static_cast<double>(std::int64_t{1} << leaf.depth);
    if (std::abs(leaf.a - expected_a) > tol || std::abs((leaf.b - leaf.a) - leaf_width) > tol)
      throw std::invalid_argument("leaf bounds [" + std::to_string(leaf.a) + ", " +
                                  std::to_string(leaf.b) + "] do not lie on the dyadic grid");
    if (leaf.offset != expected_offset || leaf.nn != cfg.leaf_samples(leaf.depth))
      throw std::invalid_argument("leaf sample range does not match its depth");
    if (leaf.fit.coef.size() != cfg.num_modes())
      throw std::invalid_argument("leaf coefficient vector has the wrong length");
    expected_a = leaf.b;
    expected_offset += leaf.nn - 1;
  }
  if (std::abs(expected_a - b) > tol || expected_offset != cfg.M - 1)
    throw std::invalid_argument("partition does not cover the interval");
}

// Shared concatenation: `evaluate` maps a leaf to its L periodic-grid values.
template <typename Evaluate>
std::vector<double> assemble(const PartitionResult& part, const PrecomputedOperators& ops,
                             Evaluate&& evaluate) {
  const auto& cfg = ops.config();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.M));
  std::vector<double> interp;
  for (const auto& leaf : part.leaves) {
    const int r_ds = 1 << (cfg.r - leaf.depth);
    const Eigen::VectorXd coarse = evaluate(leaf);
    interp = trig_upsample(
        std::span<const double>(coarse.data(), static_cast<std::size_t>(coarse.size())), r_ds);
    const auto count = static_cast<std::size_t>(r_ds) * static_cast<std::size_t>(cfg.m - 1);
    out.insert(out.end(), interp.begin(), interp.begin() + static_cast<std::ptrdiff_t>(count));
  }
  const auto& last = part.leaves.back();
  const auto last_count = static_cast<std::size_t>(last.nn - 1);
  out.push_back(interp[last_count]);
  return out;
}

}  // namespace

DerivativeResult reconstruct_derivative_order(const PartitionResult& part,
                                              const PrecomputedOperators& ops, double a, double b,
                                              int q, int max_order) {
  if (q < 1) throw std::invalid_argument("derivative order must be >= 1");
  if (q > max_order)
    throw std::invalid_argument("derivative order " + std::to_string(q) + " exceeds the cap " +
                                std::to_string(max_order));
  validate(part, ops, a, b);

  // dTG carries one factor of (i l span); the remaining q-1 go on the
  // coefficients so that q = 1 multiplies by exactly 1.
  Eigen::VectorXcd extra = Eigen::VectorXcd::Ones(ops.config().num_modes());
  for (int p = 1; p < q; ++p) extra = extra.cwiseProduct(ops.derivative_factors());

  DerivativeResult result;
  result.order = q;
  result.dvalues = assemble(part, ops, [&](const PartitionLeaf& leaf) -> Eigen::VectorXd {
    const double scale = std::pow(1.0 / (leaf.b - leaf.a), q);
    return (ops.dTG() * extra.cwiseProduct(leaf.fit.coef)).real() * scale;
  });
  result.x = uniform_grid(a, b, ops.config().M);
  result.leaves = part.leaves;
  return result;
}

DerivativeResult reconstruct_derivative(const PartitionResult& part,
                                        const PrecomputedOperators& ops, double a, double b) {
  return reconstruct_derivative_order(part, ops, a, b, 1);
}

std::vector<double> reconstruct_function(const PartitionResult& part,
                                         const PrecomputedOperators& ops, double a, double b) {
  validate(part, ops, a, b);
  return assemble(part, ops, [&](const PartitionLeaf& leaf) -> Eigen::VectorXd {
    return (ops.TG() * leaf.fit.coef).real();
  });
}

}  // namespace fediff
