#include "fediff/adaptive_partition.hpp"
#include "fediff/bench_harness.hpp"
#include "fediff/test_functions.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

using namespace fediff;

namespace {

const PrecomputedOperators& ops6() {
  static const PrecomputedOperators ops = build_operators(build_config(9, 1.0, 6.0, 6, 2.0));
  return ops;
}

std::vector<double> sample(double (*f)(double), const SpectralConfig& cfg, double a = -1.0,
                           double b = 1.0) {
  std::vector<double> y;
  for (double x : uniform_grid(a, b, cfg.M)) y.push_back(f(x));
  return y;
}

SignalRecord noisy(FunctionId id, double delta1, std::uint64_t seed) {
  const auto& cfg = ops6().config();
  SignalRecord s;
  s.samples = add_noise(sample(test_function(id).eval, cfg), delta1, seed);
  s.delta1 = delta1;
  return s;
}

void check_tiling(const PartitionResult& part, const SpectralConfig& cfg, double a, double b) {
  REQUIRE(!part.leaves.empty());
  CHECK(part.leaves.front().a == a);
  CHECK(part.leaves.back().b == b);
  std::int64_t total = 0;
  for (std::size_t j = 0; j < part.leaves.size(); ++j) {
    const auto& leaf = part.leaves[j];
    CHECK(leaf.b - leaf.a == doctest::Approx((b - a) / std::pow(2.0, leaf.depth)));
    CHECK(leaf.nn == cfg.leaf_samples(leaf.depth));
    CHECK((leaf.nn - 1) % (cfg.m - 1) == 0);
    CHECK(leaf.offset == total);
    if (j > 0) CHECK(part.leaves[j - 1].b == leaf.a);
    total += leaf.nn - 1;
  }
  CHECK(total == cfg.M - 1);
}

}  // namespace

TEST_CASE("downsample examples") {
  std::vector<double> y(19);
  std::iota(y.begin(), y.end(), 0.0);
  CHECK(downsample(y, 19) == y);

  std::vector<double> y37(37);
  std::iota(y37.begin(), y37.end(), 0.0);
  const auto d = downsample(y37, 19);
  REQUIRE(d.size() == 19);
  for (int i = 0; i < 19; ++i) CHECK(d[static_cast<std::size_t>(i)] == 2.0 * i);

  const auto grid = uniform_grid(-1.0, 1.0, 1153);
  const auto g = downsample(grid, 19);
  REQUIRE(g.size() == 19);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == 1.0);
  for (int i = 0; i < 19; ++i) CHECK(g[static_cast<std::size_t>(i)] == grid[static_cast<std::size_t>(64 * i)]);

  std::vector<double> bad(38, 0.0);
  CHECK_THROWS_AS(downsample(bad, 19), std::invalid_argument);
}

TEST_CASE("accept_test examples") {
  CHECK(accept_test(0.0, 1153, 1e-2, 2.0, 19));
  CHECK(accept_test(0.0, 1153, 0.0, 2.0, 19));
  CHECK(accept_test(1e6, 19, 1e-2, 2.0, 19));
  const double threshold = 2.0 * std::sqrt(1153.0 / 3.0) * 1e-2;
  CHECK(threshold == doctest::Approx(0.39209).epsilon(1e-4));
  CHECK_FALSE(accept_test(0.40, 1153, 1e-2, 2.0, 19));
  CHECK(accept_test(0.39, 1153, 1e-2, 2.0, 19));
  CHECK(accept_test(threshold, 1153, 1e-2, 2.0, 19));
}

TEST_CASE("a cubic at high noise is fitted by a single leaf") {
  const auto& ops = ops6();
  const auto part = partition_signal(noisy(FunctionId::f2, 1e-2, 1), ops);
  REQUIRE(part.leaves.size() == 1);
  CHECK(part.leaves[0].depth == 0);
  CHECK(part.leaves[0].nn == ops.config().M);
  CHECK(part.leaves[0].residual <= part.leaves[0].threshold);
}

TEST_CASE("an input of m samples gives exactly one leaf") {
  const auto& ops = ops6();
  std::vector<double> y(19);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 2 == 0) ? 5.0 : -5.0;
  const auto part = recursive_fit(0.0, 1.0, y, 0.0, ops, {0.0});
  REQUIRE(part.leaves.size() == 1);
  CHECK(part.leaves[0].nn == 19);
}

TEST_CASE("chirp leaves localize toward the boundary") {
  const auto& ops = ops6();
  const auto& cfg = ops.config();
  const auto part = partition_signal(noisy(FunctionId::f5, 1e-3, 1), ops);
  CHECK(part.leaves.size() > 1);
  check_tiling(part, cfg, -1.0, 1.0);

  int max_depth = 0;
  for (const auto& l : part.leaves) max_depth = std::max(max_depth, l.depth);
  for (const auto& l : part.leaves)
    if (l.depth == max_depth) CHECK(std::max(std::abs(l.a), std::abs(l.b)) >= 0.5);

  // Deepest leaf per distance bucket is nondecreasing in the distance.
  std::map<int, int> deepest;
  for (const auto& l : part.leaves) {
    const int bucket = static_cast<int>(std::floor(std::max(std::abs(l.a), std::abs(l.b)) / 0.25 - 1e-12));
    deepest[bucket] = std::max(deepest[bucket], l.depth);
  }
  int prev = -1;
  for (const auto& [bucket, depth] : deepest) {
    CHECK(depth >= prev);
    prev = depth;
  }
}

TEST_CASE("accepted leaves satisfy the acceptance rule") {
  const auto& ops = ops6();
  const auto& cfg = ops.config();
  for (auto id : {FunctionId::f1, FunctionId::f3, FunctionId::f4, FunctionId::f5, FunctionId::f6}) {
    for (double delta : {1e-2, 1e-4}) {
      const auto signal = noisy(id, delta, 2);
      const auto part = partition_signal(signal, ops);
      check_tiling(part, cfg, -1.0, 1.0);
      for (const auto& l : part.leaves) {
        CHECK(l.threshold == doctest::Approx(cfg.rho * std::sqrt(l.nn / 3.0) * part.delta_used));
        if (l.nn > cfg.m) CHECK(l.residual <= l.threshold);
        const bool reached = l.fit.residual <= delta * std::sqrt(cfg.m / 3.0) + 1e-15;
        CHECK((reached || l.fit.k_used == std::min(cfg.m, ops.rank())));
      }
    }
  }
}

TEST_CASE("all leaves share the operator object") {
  const auto& ops = ops6();
  const auto part = partition_signal(noisy(FunctionId::f5, 1e-3, 1), ops);
  CHECK(part.operators == &ops);
}

TEST_CASE("input validation") {
  const auto& ops = ops6();
  auto signal = noisy(FunctionId::f1, 1e-2, 1);
  signal.delta1 = -1e-3;
  CHECK_THROWS_AS(partition_signal(signal, ops), std::invalid_argument);

  signal.delta1 = 1e-2;
  signal.samples.pop_back();
  CHECK_THROWS_AS(partition_signal(signal, ops), std::invalid_argument);

  std::vector<double> y(37, 1.0);
  CHECK_THROWS_AS(recursive_fit(1.0, 0.0, y, 1e-2, ops), std::invalid_argument);
  std::vector<double> y55(55, 1.0);
  CHECK_THROWS_AS(recursive_fit(0.0, 1.0, y55, 1e-2, ops), std::invalid_argument);
  // Sub-dyadic inputs of the right form are fine.
  CHECK_NOTHROW(recursive_fit(0.0, 1.0, y, 1e-2, ops));
}

TEST_CASE("smaller noise bounds never reduce the leaf count") {
  const auto& ops = ops6();
  for (auto id : {FunctionId::f1, FunctionId::f3, FunctionId::f5, FunctionId::f6}) {
    SignalRecord s;
    s.samples = sample(test_function(id).eval, ops.config());
    std::size_t prev = 0;
    for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
      s.delta1 = delta;
      const auto part = partition_signal(s, ops);
      CHECK(part.leaves.size() >= prev);
      prev = part.leaves.size();
    }
  }
}

TEST_CASE("noise floor") {
  const auto& ops = ops6();
  SignalRecord s;
  s.samples = sample(test_function(FunctionId::f1).eval, ops.config());
  s.delta1 = 0.0;
  const double floor = default_delta_floor(s.samples);
  double sq = 0.0;
  for (double v : s.samples) sq += v * v;
  CHECK(floor == doctest::Approx(1e-12 * std::sqrt(sq / static_cast<double>(s.samples.size()))));

  const auto with_floor = partition_signal(s, ops);
  CHECK(with_floor.delta_used == floor);
  const auto without = partition_signal(s, ops, {0.0});
  CHECK(without.delta_used == 0.0);
  CHECK(without.leaves.size() >= with_floor.leaves.size());
  for (const auto& l : without.leaves)
    if (l.nn > ops.config().m) CHECK(l.residual == 0.0);

  const auto explicit_floor = partition_signal(s, ops, {1e-3});
  CHECK(explicit_floor.delta_used == 1e-3);
}

TEST_CASE("partition trace round trip") {
  const auto& ops = ops6();
  const auto part = partition_signal(noisy(FunctionId::f5, 1e-3, 1), ops);
  std::stringstream ss;
  write_partition_trace(ss, part);
  const auto lines = read_partition_trace(ss);
  REQUIRE(lines.size() == part.leaves.size());
  for (std::size_t j = 0; j < lines.size(); ++j) {
    CHECK(lines[j].a == part.leaves[j].a);
    CHECK(lines[j].b == part.leaves[j].b);
    CHECK(lines[j].depth == part.leaves[j].depth);
    CHECK(lines[j].k_used == part.leaves[j].fit.k_used);
    CHECK(lines[j].residual == part.leaves[j].residual);
    CHECK(lines[j].threshold == part.leaves[j].threshold);
  }
  std::stringstream bad("0\t1\tx\n");
  CHECK_THROWS_AS(read_partition_trace(bad), std::runtime_error);
}

TEST_CASE("partition is deterministic") {
  const auto& ops = ops6();
  const auto signal = noisy(FunctionId::f6, 1e-4, 9);
  const auto p1 = partition_signal(signal, ops);
  const auto p2 = partition_signal(signal, ops);
  REQUIRE(p1.leaves.size() == p2.leaves.size());
  for (std::size_t j = 0; j < p1.leaves.size(); ++j) {
    CHECK(p1.leaves[j].residual == p2.leaves[j].residual);
    CHECK(p1.leaves[j].fit.coef == p2.leaves[j].fit.coef);
  }
}
