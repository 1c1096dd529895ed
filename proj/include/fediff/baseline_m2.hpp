#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace fediff {

/// Settings of the full-interval Tikhonov baseline with super-order
/// penalty weights exp(|l| pi / 2).
struct M2Config {
  double T2 = 2.0;
  double gamma2 = 2.0;
  int n2 = 0;
  /// Discrepancy constant, > 1.
  double C = 1.1;
  double alpha_lo = 1e-16;
  double alpha_hi = 1e4;
  /// Relative tolerance on |residual - C delta|.
  double rel_tol = 1e-2;
  int max_iter = 60;
  /// When the bracket does not straddle the discrepancy level, return the
  /// nearer bracket end instead of throwing. Used by the benchmark, where
  /// an unreachable discrepancy level is a result rather than an error.
  bool clamp_to_bracket = false;
};

/// Largest n2 with gamma2 (2 n2 + 1) <= M, i.e. floor((ceil(M/gamma2) - 1) / 2).
/// Throws std::invalid_argument for T2 <= 1, gamma2 < 1, C <= 1 or an
/// empty/inverted alpha bracket.
M2Config make_m2_config(std::int64_t M, double T2 = 2.0, double gamma2 = 2.0, double C = 1.1);

struct M2Fit {
  Eigen::VectorXcd coef;
  double alpha = 0.0;
  /// Discretized L2 misfit sqrt((b-a)/M) ||A v - y|| at alpha.
  double residual = 0.0;
  /// (alpha, residual) pairs visited by the selection, in visiting order.
  std::vector<std::pair<double, double>> iterates;
};

/// Full-interval design for the baseline on the M-node grid of [a, b].
///
/// The Tikhonov normal equations (w A^H A + alpha R^H R) v = w A^H y, with
/// quadrature weight w = (b-a)/M and R = diag(exp(|l| pi/2)), are solved
/// through a spectral decomposition of the scaled normal matrix
/// w R^-1 A^H A R^-1, formed once per design. Every alpha then costs one
/// diagonal solve.
class M2Solver {
public:
  M2Solver(const M2Config& cfg, double a, double b, std::int64_t M);

  const M2Config& config() const { return cfg_; }
  double a() const { return a_; }
  double b() const { return b_; }
  std::int64_t samples() const { return M_; }

  /// M x (2 n2 + 1) design matrix phi_l(t_i), t_i in [0, 2 pi / T2].
  const Eigen::MatrixXcd& design() const { return A_; }
  /// Penalty weights exp(|l| pi / 2) (may be +inf for large |l|).
  const Eigen::VectorXd& penalty() const { return penalty_; }

  /// Tikhonov solution for a fixed alpha > 0.
  Eigen::VectorXcd solve(std::span<const double> y, double alpha) const;

  /// Right-hand side expressed in the eigenbasis of the scaled normal
  /// matrix; reused across alpha values for the same data.
  Eigen::VectorXcd project_rhs(std::span<const double> y) const;

  /// Tikhonov solution from a projected right-hand side.
  Eigen::VectorXcd solve_projected(const Eigen::VectorXcd& projected, double alpha) const;

  /// Discretized L2 misfit of coefficients v.
  double misfit(std::span<const double> y, const Eigen::VectorXcd& v) const;

private:
  M2Config cfg_;
  double a_, b_;
  std::int64_t M_;
  double quad_weight_;
  Eigen::MatrixXcd A_;
  Eigen::VectorXd penalty_;
  Eigen::VectorXd inv_penalty_;
  Eigen::VectorXd eigvals_;
  Eigen::MatrixXcd eigvecs_;
};

/// Discrepancy-principle choice of alpha: bisection in log(alpha) until
/// |misfit - C delta_l2| <= rel_tol * C delta_l2 or max_iter steps, where
/// delta_l2 = sqrt((b-a)/M) * delta.
///
/// `delta` is the discrete l2 noise norm estimate delta1 * sqrt(M/3).
/// Throws std::runtime_error when the alpha bracket does not straddle the
/// discrepancy level, unless clamp_to_bracket is set.
M2Fit m2_select(std::span<const double> y, double delta, const M2Solver& solver);

/// Selected alpha only.
double m2_select_alpha(std::span<const double> y, double delta, const M2Solver& solver);

/// m2_select plus size check. Throws std::invalid_argument on delta <= 0 or
/// a sample count different from the solver's M.
M2Fit m2_fit(std::span<const double> y, double delta, const M2Solver& solver);

/// Term-wise derivative of the fitted series on the M-node grid of [a, b];
/// chain-rule factor (2 pi / T2) / (b - a).
std::vector<double> m2_derivative(const M2Fit& fit, const M2Config& cfg, double a, double b,
                                  std::int64_t M);

/// Fitted function values on the M-node grid.
std::vector<double> m2_evaluate(const M2Fit& fit, const M2Config& cfg, double a, double b,
                                std::int64_t M);

}  // namespace fediff
