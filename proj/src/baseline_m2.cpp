#include "fediff/baseline_m2.hpp"

#include "fediff/csv_io.hpp"
#include "fediff/spectral_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fediff {

namespace {

// The M-node grid of [a, b] mapped onto [0, 2 pi / T2].
std::vector<double> periodic_nodes(const M2Config& cfg, std::int64_t M) {
  return uniform_grid(0.0, 2.0 * std::numbers::pi / cfg.T2, M);
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> y) {
  return {y.data(), static_cast<Eigen::Index>(y.size())};
}

}  // namespace

M2Config make_m2_config(std::int64_t M, double T2, double gamma2, double C) {
  if (!(T2 > 1.0)) throw std::invalid_argument("T2 must be > 1");
  if (!(gamma2 >= 1.0)) throw std::invalid_argument("gamma2 must be >= 1");
  if (!(C > 1.0)) throw std::invalid_argument("discrepancy constant C must be > 1");
  const auto per_mode = static_cast<std::int64_t>(std::ceil(static_cast<double>(M) / gamma2));
  if (per_mode < 3) throw std::invalid_argument("too few samples for the baseline");
  M2Config cfg;
  cfg.T2 = T2;
  cfg.gamma2 = gamma2;
  cfg.C = C;
  cfg.n2 = static_cast<int>((per_mode - 1) / 2);
  return cfg;
}

M2Solver::M2Solver(const M2Config& cfg, double a, double b, std::int64_t M)
    : cfg_(cfg), a_(a), b_(b), M_(M) {
  if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
  if (cfg.n2 < 1 || 2 * static_cast<std::int64_t>(cfg.n2) + 1 > M)
    throw std::invalid_argument("n2 must satisfy 1 <= 2 n2 + 1 <= M");
  if (!(cfg.C > 1.0)) throw std::invalid_argument("discrepancy constant C must be > 1");
  if (!(cfg.alpha_lo > 0.0 && cfg.alpha_lo < cfg.alpha_hi))
    throw std::invalid_argument("alpha bracket must satisfy 0 < alpha_lo < alpha_hi");

  quad_weight_ = (b - a) / static_cast<double>(M);
  const std::vector<double> t = periodic_nodes(cfg, M);
  A_ = fourier_columns(t, cfg.n2);

  const int modes = 2 * cfg.n2 + 1;
  penalty_.resize(modes);
  inv_penalty_.resize(modes);
  for (int col = 0; col < modes; ++col) {
    const double e = std::abs(mode_index(col, cfg.n2)) * std::numbers::pi / 2.0;
    penalty_(col) = std::exp(e);
    inv_penalty_(col) = std::exp(-e);
  }

  // w R^-1 A^H A R^-1 = Q diag(lambda) Q^H. The normal matrix is PSD in
  // exact arithmetic; rounding can leave tiny negative eigenvalues, which
  // are clipped to zero.
  Eigen::MatrixXcd normal = A_.adjoint() * A_;
  normal = quad_weight_ * (inv_penalty_.asDiagonal() * normal * inv_penalty_.asDiagonal());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(normal);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of the baseline normal matrix failed");
  eigvals_ = eig.eigenvalues().cwiseMax(0.0);
  eigvecs_ = eig.eigenvectors();
}

Eigen::VectorXcd M2Solver::project_rhs(std::span<const double> y) const {
  if (static_cast<std::int64_t>(y.size()) != M_)
    throw std::invalid_argument("baseline expects " + std::to_string(M_) + " samples, got " +
                                std::to_string(y.size()));
  const Eigen::VectorXcd aty = A_.adjoint() * as_vector(y).cast<std::complex<double>>();
  return eigvecs_.adjoint() * (quad_weight_ * inv_penalty_.asDiagonal() * aty);
}

Eigen::VectorXcd M2Solver::solve_projected(const Eigen::VectorXcd& projected, double alpha) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  const Eigen::VectorXd denom = (eigvals_.array() + alpha).matrix();
  const Eigen::VectorXcd u = eigvecs_ * projected.cwiseQuotient(denom.cast<std::complex<double>>());
  return inv_penalty_.asDiagonal() * u;
}

Eigen::VectorXcd M2Solver::solve(std::span<const double> y, double alpha) const {
  return solve_projected(project_rhs(y), alpha);
}

double M2Solver::misfit(std::span<const double> y, const Eigen::VectorXcd& v) const {
  const Eigen::VectorXcd diff = A_ * v - as_vector(y).cast<std::complex<double>>();
  return std::sqrt(quad_weight_) * diff.norm();
}

M2Fit m2_select(std::span<const double> y, double delta, const M2Solver& solver) {
  const auto& cfg = solver.config();
  const Eigen::VectorXcd proj = solver.project_rhs(y);
  const double target =
      cfg.C * std::sqrt((solver.b() - solver.a()) / static_cast<double>(solver.samples())) * delta;
  const double tol = cfg.rel_tol * target;

  M2Fit fit;
  auto evaluate = [&](double alpha) {
    Eigen::VectorXcd v = solver.solve_projected(proj, alpha);
    const double res = solver.misfit(y, v);
    fit.iterates.emplace_back(alpha, res);
    return std::pair{std::move(v), res};
  };
  auto accept = [&](double alpha, std::pair<Eigen::VectorXcd, double>&& r) {
    fit.alpha = alpha;
    fit.coef = std::move(r.first);
    fit.residual = r.second;
    return std::move(fit);
  };

  double lo = cfg.alpha_lo, hi = cfg.alpha_hi;
  auto at_lo = evaluate(lo);
  if (std::abs(at_lo.second - target) <= tol) return accept(lo, std::move(at_lo));
  auto at_hi = evaluate(hi);
  if (std::abs(at_hi.second - target) <= tol) return accept(hi, std::move(at_hi));
  if (cfg.clamp_to_bracket) {
    if (at_lo.second > target) return accept(lo, std::move(at_lo));
    if (at_hi.second < target) return accept(hi, std::move(at_hi));
  }
  if (!(at_lo.second < target && target < at_hi.second))
    throw std::runtime_error("alpha bracket [" + format_double(lo) + ", " + format_double(hi) +
                             "] does not straddle the discrepancy level (misfits " +
                             format_double(at_lo.second) + ", " + format_double(at_hi.second) +
                             " vs target " + format_double(target) + "); widen the bracket");

  double res_lo = at_lo.second, res_hi = at_hi.second;
  std::pair<Eigen::VectorXcd, double> cur;
  double mid = lo;
  for (int it = 0; it < cfg.max_iter; ++it) {
    mid = std::sqrt(lo * hi);
    cur = evaluate(mid);
    // Tikhonov misfit is nondecreasing in alpha.
    if (cur.second < res_lo * (1.0 - 1e-6) || cur.second > res_hi * (1.0 + 1e-6))
      throw std::runtime_error("baseline misfit is not monotone in alpha at alpha = " +
                               std::to_string(mid));
    if (std::abs(cur.second - target) <= tol) break;
    if (cur.second < target) {
      lo = mid;
      res_lo = cur.second;
    } else {
      hi = mid;
      res_hi = cur.second;
    }
  }
  return accept(mid, std::move(cur));
}

double m2_select_alpha(std::span<const double> y, double delta, const M2Solver& solver) {
  return m2_select(y, delta, solver).alpha;
}

M2Fit m2_fit(std::span<const double> y, double delta, const M2Solver& solver) {
  if (!(delta > 0.0)) throw std::invalid_argument("noise norm delta must be > 0");
  if (static_cast<std::int64_t>(y.size()) != solver.samples())
    throw std::invalid_argument("baseline expects " + std::to_string(solver.samples()) +
                                " samples, got " + std::to_string(y.size()));
  return m2_select(y, delta, solver);
}

std::vector<double> m2_evaluate(const M2Fit& fit, const M2Config& cfg, double /*a*/,
                                double /*b*/, std::int64_t M) {
  const Eigen::MatrixXcd design = fourier_columns(periodic_nodes(cfg, M), cfg.n2);
  const Eigen::VectorXd vals = (design * fit.coef).real();
  return {vals.data(), vals.data() + vals.size()};
}

std::vector<double> m2_derivative(const M2Fit& fit, const M2Config& cfg, double a, double b,
                                  std::int64_t M) {
  if (fit.coef.size() != 2 * cfg.n2 + 1)
    throw std::invalid_argument("coefficient vector does not match n2");
  const double chain = (2.0 * std::numbers::pi / cfg.T2) / (b - a);
  Eigen::VectorXcd dcoef(fit.coef.size());
  for (Eigen::Index col = 0; col < fit.coef.size(); ++col)
    dcoef(col) = fit.coef(col) *
                 std::complex<double>(0.0, mode_index(static_cast<int>(col), cfg.n2) * chain);
  const Eigen::MatrixXcd design = fourier_columns(periodic_nodes(cfg, M), cfg.n2);
  const Eigen::VectorXd vals = (design * dcoef).real();
  return {vals.data(), vals.data() + vals.size()};
}

}  // namespace fediff
