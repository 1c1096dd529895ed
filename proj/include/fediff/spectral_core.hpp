#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fediff {

/// Discretization parameters shared by every subinterval fit.
///
/// The primary knobs are the maximum frequency index `n`, the oversampling
/// ratio `gamma`, the extension ratio `T`, the maximum recursion depth `r`
/// and the acceptance relaxation `rho`. The node counts are derived:
///
///   m = ceil(gamma * (2n + 1))   local fitting nodes
///   L = ceil(T * m)              nodes of the periodic extension grid
///   M = 2^r (m - 1) + 1          global sampling nodes
struct SpectralConfig {
  int n = 9;
  double gamma = 1.0;
  double T = 6.0;
  int r = 6;
  double rho = 2.0;

  int m = 0;
  int L = 0;
  std::int64_t M = 0;

  int num_modes() const { return 2 * n + 1; }

  /// Spacing of the periodic grid, 2*pi/L.
  double grid_step() const;

  /// Length in the periodic variable covered by the m local nodes,
  /// (m - 1) * 2*pi / L. A subinterval of width w is mapped onto
  /// [0, local_span()], so d/dx = (local_span() / w) d/dt.
  double local_span() const;

  /// Number of samples spanned by a leaf at the given depth.
  std::int64_t leaf_samples(int depth) const;

  bool operator==(const SpectralConfig&) const = default;
};

/// Validates the parameters and derives m, L and M.
/// Throws std::invalid_argument on T <= 1, gamma < 1, n < 1, r < 0 or
/// rho <= 1.
SpectralConfig build_config(int n, double gamma, double T, int r,
                            double rho = 2.0);

/// Uniform closed grid a + i (b - a) / (count - 1); the last node is b.
std::vector<double> uniform_grid(double a, double b, std::int64_t count);

/// Frequency index of column `col` (0-based) for a basis with max index n.
inline int mode_index(int col, int n) { return col - n; }

/// Unweighted Fourier-extension columns phi_l(t) for l = -n..n evaluated at
/// the given points; phi_0 = 1/sqrt(2), phi_l = exp(i l t) otherwise.
Eigen::MatrixXcd fourier_columns(std::span<const double> t, int n);

/// Shared discretization: weighted sub-Fourier matrix, its extension to the
/// full periodic grid, derivative matrices and the thin SVD. Immutable.
class PrecomputedOperators {
public:
  explicit PrecomputedOperators(const SpectralConfig& cfg);

  const SpectralConfig& config() const { return cfg_; }

  /// Periodic grid t_i = i * 2*pi/L, i = 0..L-1.
  const Eigen::VectorXd& grid() const { return grid_; }
  /// Diagonal weights w_l = exp(|l|), l = -n..n.
  const Eigen::VectorXd& weights() const { return weights_; }

  /// m x (2n+1): phi_l(t_i) / w_l on the first m grid nodes.
  const Eigen::MatrixXcd& G() const { return G_; }
  /// L x (2n+1): the same columns on the whole periodic grid.
  const Eigen::MatrixXcd& TG() const { return TG_; }
  /// G * diag(i l * local_span).
  const Eigen::MatrixXcd& dG() const { return dG_; }
  /// TG * diag(i l * local_span).
  const Eigen::MatrixXcd& dTG() const { return dTG_; }
  /// Per-column derivative factor i l * local_span.
  const Eigen::VectorXcd& derivative_factors() const { return dfac_; }

  const Eigen::MatrixXcd& U() const { return U_; }
  const Eigen::VectorXd& S() const { return S_; }
  const Eigen::MatrixXcd& V() const { return V_; }

  /// Number of usable SVD terms: min(m, 2n+1), cut at the first exactly
  /// zero singular value.
  int rank() const { return rank_; }

  /// Writes a regenerable binary cache of this object.
  void save(const std::filesystem::path& file) const;

  /// Loads a cache written by save(). Returns an object rebuilt from `cfg`
  /// when the file is missing, unreadable or was written for another
  /// configuration.
  static PrecomputedOperators load_or_build(const std::filesystem::path& file,
                                            const SpectralConfig& cfg);

private:
  PrecomputedOperators() = default;

  SpectralConfig cfg_;
  Eigen::VectorXd grid_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXcd G_, TG_, dG_, dTG_;
  Eigen::VectorXcd dfac_;
  Eigen::MatrixXcd U_, V_;
  Eigen::VectorXd S_;
  int rank_ = 0;
};

/// Builds the operators for `cfg`. Throws std::runtime_error when the SVD
/// does not reproduce G to working precision.
PrecomputedOperators build_operators(const SpectralConfig& cfg);

/// Trigonometric interpolation of one period of an L-periodic sequence onto
/// a grid `factor` times finer (zero padding in the frequency domain; the
/// Nyquist bin of an even-length input is split symmetrically).
/// Throws std::invalid_argument when factor < 1.
std::vector<double> trig_upsample(std::span<const double> values, int factor);

}  // namespace fediff
