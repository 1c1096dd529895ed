#include "fediff/gtsvd_fit.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fediff;

namespace {

const PrecomputedOperators& default_ops() {
  static const PrecomputedOperators ops = build_operators(build_config(9, 1.0, 6.0, 6, 2.0));
  return ops;
}

// gamma = 2 gives a tall local system, so projection is not the identity.
const PrecomputedOperators& tall_ops() {
  static const PrecomputedOperators ops = build_operators(build_config(9, 2.0, 6.0, 4, 2.0));
  return ops;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("zero data never enters the loop") {
  const auto& ops = default_ops();
  const std::vector<double> y(19, 0.0);
  const LocalFit fit = local_fourier_fit(y, 0.0, ops);
  CHECK(fit.k_used == 0);
  CHECK(fit.residual == 0.0);
  CHECK(fit.coef.norm() == 0.0);
  CHECK(fit.ry.norm() == 0.0);
  CHECK(discrepancy_bracket_check(fit, y, 0.0, ops));
}

TEST_CASE("data synthesized from conjugate-symmetric coefficients is reproduced") {
  const auto& ops = default_ops();
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXcd c0 = oracle::conj_symmetric(9, gen);
    const Eigen::VectorXcd gc = ops.G() * c0;
    REQUIRE(gc.imag().norm() <= 1e-12 * gc.norm());
    const std::vector<double> y = to_std(gc.real());
    const LocalFit fit = local_fourier_fit(y, 1e-10, ops);
    CHECK(fit.residual <= 1e-10);
    for (int i = 0; i < 19; ++i) CHECK(std::abs(fit.ry(i) - y[i]) <= 1e-9);
  }
}

TEST_CASE("noisy constant stops early with the discrepancy level") {
  const auto& ops = default_ops();
  const double delta_loc = 1e-2 * std::sqrt(19.0 / 3.0);
  CHECK(delta_loc == doctest::Approx(0.02517).epsilon(1e-4));
  std::uniform_real_distribution<double> u(-1e-2, 1e-2);
  auto sample = [&](std::mt19937_64& gen) {
    std::vector<double> y(19);
    for (auto& v : y) v = 1.0 + u(gen);
    return y;
  };

  std::mt19937_64 one(3);
  const auto y = sample(one);
  const LocalFit fit = local_fourier_fit(y, delta_loc, ops);
  CHECK(fit.residual <= delta_loc);
  CHECK(fit.k_used <= 5);
  CHECK(discrepancy_bracket_check(fit, y, delta_loc, ops));

  // The expected noise norm equals delta_loc, so the stopping index
  // fluctuates; the constant itself needs only the leading directions.
  std::mt19937_64 gen(17);
  int small = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto yt = sample(gen);
    const LocalFit ft = local_fourier_fit(yt, delta_loc, ops);
    CHECK(ft.residual <= delta_loc);
    CHECK(discrepancy_bracket_check(ft, yt, delta_loc, ops));
    if (ft.k_used <= 5) ++small;
  }
  CHECK(small >= trials * 8 / 10);
}

TEST_CASE("residual is nonincreasing in the truncation index") {
  const auto& ops = tall_ops();
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> y(static_cast<std::size_t>(ops.config().m));
    for (auto& v : y) v = nd(gen);
    double prev = truncated_residual(y, 0, ops);
    for (int k = 1; k <= ops.rank(); ++k) {
      const double cur = truncated_residual(y, k, ops);
      CHECK(cur <= prev * (1.0 + 1e-12));
      prev = cur;
    }
    const Eigen::Map<const Eigen::VectorXd> yd(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::VectorXcd ydc = yd.cast<std::complex<double>>();
    for (int k = 1; k <= ops.rank(); k += 3) {
      const double level = 0.5 * (truncated_residual(y, k, ops) + truncated_residual(y, k - 1, ops));
      const LocalFit fit = local_fourier_fit(y, level, ops);
      // The reported residual is that of the returned coefficients, up to the
      // roundoff of forming G * coef.
      const double tol = 1e2 * 2.2e-16 * (ops.S()(0) * fit.coef.norm() + yd.norm());
      CHECK(std::abs((ops.G() * fit.coef - ydc).norm() - fit.residual) <= tol);
      CHECK(std::abs(fit.residual - truncated_residual(y, k, ops)) <= tol);
      if (tol < 1e-3 * std::abs(truncated_residual(y, k, ops) - truncated_residual(y, k - 1, ops)))
        CHECK(fit.k_used == k);
    }
  }
}

TEST_CASE("full truncation equals the least-squares projection") {
  for (const auto* ops : {&default_ops(), &tall_ops()}) {
    const int m = ops->config().m;
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXcd c0 = oracle::conj_symmetric(ops->config().n, gen);
      const Eigen::VectorXd y = (ops->G() * c0).real();
      const LocalFit fit = local_fourier_fit(to_std(y), 0.0, *ops);
      CHECK(fit.k_used == std::min(m, ops->rank()));
      const Eigen::VectorXcd proj = oracle::ls_projection(ops->G(), y);
      CHECK((fit.ry - proj.real()).norm() <= 1e-10 * y.norm());
      CHECK(std::abs(fit.residual - (proj - y.cast<std::complex<double>>()).norm()) <=
            1e-10 * y.norm());
    }
  }
}

TEST_CASE("full truncation on arbitrary data agrees with the projection up to roundoff") {
  // Generic data excites the trailing singular directions, whose singular
  // values are at the roundoff level, so the coefficients grow like
  // 1/S(k) and G * coef carries an error of order eps * S(0) * |coef|.
  const auto& ops = default_ops();
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd y(ops.config().m);
    for (auto& v : y) v = nd(gen);
    const LocalFit fit = local_fourier_fit(to_std(y), 0.0, ops);
    const Eigen::VectorXcd proj = oracle::ls_projection(ops.G(), y);
    const double tol = 1e2 * 2.2e-16 * (ops.S()(0) * fit.coef.norm() + y.norm());
    CHECK((fit.ry - proj.real()).norm() <= tol);
  }
}

TEST_CASE("exact data from k* singular directions is recovered with k* terms") {
  const auto& ops = default_ops();
  // Singular vectors of this conjugation-closed G are real up to a phase.
  const int kstar = 4;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(19);
  const double amp[kstar] = {1.0, -0.7, 0.4, 0.3};
  for (int i = 0; i < kstar; ++i) {
    Eigen::Index arg = 0;
    ops.U().col(i).cwiseAbs().maxCoeff(&arg);
    const std::complex<double> phase = ops.U()(arg, i) / std::abs(ops.U()(arg, i));
    const Eigen::VectorXcd ui = ops.U().col(i) / phase;
    REQUIRE(ui.imag().norm() <= 1e-10);
    y += amp[i] * ui.real();
  }
  const auto yv = to_std(y);
  const double gap = truncated_residual(yv, kstar - 1, ops);
  CHECK(gap == doctest::Approx(0.3).epsilon(1e-9));
  const LocalFit fit = local_fourier_fit(yv, 1e-3 * gap, ops);
  CHECK(fit.k_used == kstar);
  CHECK(fit.residual <= 1e-12);
}

TEST_CASE("discrepancy bracket rejects a tampered truncation index") {
  const auto& ops = default_ops();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  std::vector<double> y(19);
  for (int i = 0; i < 19; ++i) y[i] = std::sin(0.1 * i) + u(gen);
  const double delta_loc = 1e-3 * std::sqrt(19.0 / 3.0);
  LocalFit fit = local_fourier_fit(y, delta_loc, ops);
  REQUIRE(fit.k_used >= 1);
  CHECK(discrepancy_bracket_check(fit, y, delta_loc, ops));
  fit.k_used -= 1;
  CHECK_FALSE(discrepancy_bracket_check(fit, y, delta_loc, ops));
}

TEST_CASE("local fit validates its inputs") {
  const auto& ops = default_ops();
  CHECK_THROWS_AS(local_fourier_fit(std::vector<double>(18, 0.0), 0.0, ops), std::invalid_argument);
  CHECK_THROWS_AS(local_fourier_fit(std::vector<double>(19, 0.0), -1.0, ops), std::invalid_argument);
}
