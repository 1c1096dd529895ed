#include "fediff/gtsvd_fit.hpp"

#include <stdexcept>
#include <string>

namespace fediff {

namespace {

void check_length(std::span<const double> y, const PrecomputedOperators& ops) {
  if (static_cast<int>(y.size()) != ops.config().m)
    throw std::invalid_argument("local fit expects " + std::to_string(ops.config().m) +
                                " samples, got " + std::to_string(y.size()));
}

}  // namespace

LocalFit local_fourier_fit(std::span<const double> y, double delta_loc,
                           const PrecomputedOperators& ops) {
  check_length(y, ops);
  if (!(delta_loc >= 0.0)) throw std::invalid_argument("delta_loc must be >= 0");

  const Eigen::Map<const Eigen::VectorXd> yd(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXcd ydc = yd.cast<std::complex<double>>();
  const auto& U = ops.U();
  const auto& S = ops.S();
  const auto& V = ops.V();
  const auto& G = ops.G();

  Eigen::VectorXcd coef = Eigen::VectorXcd::Zero(ops.config().num_modes());
  Eigen::VectorXcd ry = Eigen::VectorXcd::Zero(ops.config().m);
  double residual = yd.norm();
  const int kmax = std::min(ops.config().m, ops.rank());

  int k = 0;
  while (residual > delta_loc && k < kmax) {
    const std::complex<double> proj = U.col(k).dot(ydc) / S(k);
    const Eigen::VectorXcd ck = V.col(k) * proj;
    coef += ck;
    ry += G * ck;
    residual = (ry - ydc).norm();
    ++k;
  }

  return LocalFit{std::move(coef), ry.real(), k, residual};
}

double truncated_residual(std::span<const double> y, int k, const PrecomputedOperators& ops) {
  check_length(y, ops);
  if (k < 0 || k > ops.rank()) throw std::invalid_argument("truncation index out of range");
  const Eigen::Map<const Eigen::VectorXd> yd(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXcd ydc = yd.cast<std::complex<double>>();
  const auto Uk = ops.U().leftCols(k);
  const Eigen::VectorXcd fitted = Uk * (Uk.adjoint() * ydc);
  return (fitted - ydc).norm();
}

bool discrepancy_bracket_check(const LocalFit& fit, std::span<const double> y,
                               double delta_loc, const PrecomputedOperators& ops) {
  const int kmax = std::min(ops.config().m, ops.rank());
  if (fit.k_used < 0 || fit.k_used > kmax) return false;
  const double res_k = truncated_residual(y, fit.k_used, ops);
  if (fit.k_used == 0) return res_k <= delta_loc;
  if (fit.k_used == kmax) return truncated_residual(y, kmax - 1, ops) > delta_loc;
  return res_k <= delta_loc && delta_loc < truncated_residual(y, fit.k_used - 1, ops);
}

}  // namespace fediff
