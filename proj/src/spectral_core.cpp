#include "fediff/spectral_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fediff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr char kCacheMagic[8] = {'F', 'E', 'D', 'I', 'F', 'F', 'O', 'P'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

template <typename Derived>
void write_matrix(std::ostream& os, const Eigen::PlainObjectBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  const std::int64_t rows = mat.rows(), cols = mat.cols();
  write_pod(os, rows);
  write_pod(os, cols);
  os.write(reinterpret_cast<const char*>(mat.data()),
           static_cast<std::streamsize>(sizeof(Scalar) * rows * cols));
}

template <typename Derived>
bool read_matrix(std::istream& is, Eigen::PlainObjectBase<Derived>& mat) {
  using Scalar = typename Derived::Scalar;
  std::int64_t rows = 0, cols = 0;
  if (!read_pod(is, rows) || !read_pod(is, cols)) return false;
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 28)) return false;
  mat.resize(rows, cols);
  return static_cast<bool>(
      is.read(reinterpret_cast<char*>(mat.data()),
              static_cast<std::streamsize>(sizeof(Scalar) * rows * cols)));
}

}  // namespace

double SpectralConfig::grid_step() const { return kTwoPi / L; }

double SpectralConfig::local_span() const { return (m - 1) * grid_step(); }

std::int64_t SpectralConfig::leaf_samples(int depth) const {
  return (std::int64_t{1} << (r - depth)) * (m - 1) + 1;
}

SpectralConfig build_config(int n, double gamma, double T, int r, double rho) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(gamma >= 1.0))
    throw std::invalid_argument("gamma must be >= 1 (local system would be underdetermined)");
  if (!(T > 1.0))
    throw std::invalid_argument("T must be > 1 (no extension region)");
  if (r < 0 || r > 40) throw std::invalid_argument("r must lie in [0, 40]");
  if (!(rho > 1.0)) throw std::invalid_argument("rho must be > 1");

  SpectralConfig cfg;
  cfg.n = n;
  cfg.gamma = gamma;
  cfg.T = T;
  cfg.r = r;
  cfg.rho = rho;
  cfg.m = static_cast<int>(std::ceil(gamma * (2 * n + 1)));
  cfg.L = static_cast<int>(std::ceil(T * cfg.m));
  cfg.M = (std::int64_t{1} << r) * (cfg.m - 1) + 1;
  return cfg;
}

std::vector<double> uniform_grid(double a, double b, std::int64_t count) {
  std::vector<double> x(static_cast<std::size_t>(count));
  if (count == 1) {
    x[0] = a;
    return x;
  }
  const double h = (b - a) / static_cast<double>(count - 1);
  for (std::int64_t i = 0; i < count; ++i) x[static_cast<std::size_t>(i)] = a + static_cast<double>(i) * h;
  x.back() = b;
  return x;
}

Eigen::MatrixXcd fourier_columns(std::span<const double> t, int n) {
  const auto rows = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXcd out(rows, 2 * n + 1);
  for (int col = 0; col < 2 * n + 1; ++col) {
    const int l = mode_index(col, n);
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, col) = (l == 0) ? std::complex<double>(std::numbers::sqrt2 / 2.0, 0.0)
                             : std::polar(1.0, l * t[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

PrecomputedOperators::PrecomputedOperators(const SpectralConfig& cfg) : cfg_(cfg) {
  const int modes = cfg.num_modes();
  grid_.resize(cfg.L);
  for (int i = 0; i < cfg.L; ++i) grid_(i) = i * cfg.grid_step();

  weights_.resize(modes);
  dfac_.resize(modes);
  for (int col = 0; col < modes; ++col) {
    const int l = mode_index(col, cfg.n);
    weights_(col) = std::exp(static_cast<double>(std::abs(l)));
    dfac_(col) = std::complex<double>(0.0, l * cfg.local_span());
  }

  const Eigen::VectorXd inv_w = weights_.cwiseInverse();
  TG_ = fourier_columns(std::span<const double>(grid_.data(), grid_.size()), cfg.n) *
        inv_w.asDiagonal();
  G_ = TG_.topRows(cfg.m);
  dTG_ = TG_ * dfac_.asDiagonal();
  dG_ = G_ * dfac_.asDiagonal();

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  U_ = svd.matrixU();
  S_ = svd.singularValues();
  V_ = svd.matrixV();

  const double err = (G_ - U_ * S_.asDiagonal() * V_.adjoint()).operatorNorm();
  if (!std::isfinite(err) || S_.size() == 0 || !(err <= 1e-12 * S_(0)))
    throw std::runtime_error("SVD of the sub-Fourier matrix failed to reproduce it (error " +
                             std::to_string(err) + ")");

  rank_ = 0;
  while (rank_ < S_.size() && S_(rank_) > 0.0) ++rank_;
}

PrecomputedOperators build_operators(const SpectralConfig& cfg) {
  return PrecomputedOperators(cfg);
}

void PrecomputedOperators::save(const std::filesystem::path& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open cache file for writing: " + file.string());
  os.write(kCacheMagic, sizeof(kCacheMagic));
  write_pod(os, kCacheVersion);
  write_pod(os, cfg_.n);
  write_pod(os, cfg_.gamma);
  write_pod(os, cfg_.T);
  write_pod(os, cfg_.r);
  write_pod(os, cfg_.rho);
  write_pod(os, rank_);
  write_matrix(os, grid_);
  write_matrix(os, weights_);
  write_matrix(os, G_);
  write_matrix(os, TG_);
  write_matrix(os, dG_);
  write_matrix(os, dTG_);
  write_matrix(os, dfac_);
  write_matrix(os, U_);
  write_matrix(os, S_);
  write_matrix(os, V_);
  if (!os) throw std::runtime_error("failed writing cache file: " + file.string());
}

PrecomputedOperators PrecomputedOperators::load_or_build(const std::filesystem::path& file,
                                                         const SpectralConfig& cfg) {
  std::ifstream is(file, std::ios::binary);
  if (!is) return PrecomputedOperators(cfg);

  char magic[sizeof(kCacheMagic)] = {};
  std::uint32_t version = 0;
  SpectralConfig stored;
  PrecomputedOperators ops;
  bool ok = is.read(magic, sizeof(magic)) &&
            std::equal(std::begin(magic), std::end(magic), std::begin(kCacheMagic)) &&
            read_pod(is, version) && version == kCacheVersion && read_pod(is, stored.n) &&
            read_pod(is, stored.gamma) && read_pod(is, stored.T) && read_pod(is, stored.r) &&
            read_pod(is, stored.rho);
  if (!ok) return PrecomputedOperators(cfg);

  try {
    stored = build_config(stored.n, stored.gamma, stored.T, stored.r, stored.rho);
  } catch (const std::invalid_argument&) {
    return PrecomputedOperators(cfg);
  }
  // rho only affects acceptance, not the matrices.
  stored.rho = cfg.rho;
  if (!(stored == cfg)) return PrecomputedOperators(cfg);

  ops.cfg_ = cfg;
  ok = read_pod(is, ops.rank_) && read_matrix(is, ops.grid_) && read_matrix(is, ops.weights_) &&
       read_matrix(is, ops.G_) && read_matrix(is, ops.TG_) && read_matrix(is, ops.dG_) &&
       read_matrix(is, ops.dTG_) && read_matrix(is, ops.dfac_) && read_matrix(is, ops.U_) &&
       read_matrix(is, ops.S_) && read_matrix(is, ops.V_);
  const Eigen::Index modes = cfg.num_modes();
  ok = ok && ops.G_.rows() == cfg.m && ops.G_.cols() == modes && ops.TG_.rows() == cfg.L &&
       ops.TG_.cols() == modes && ops.S_.size() > 0 && ops.U_.cols() == ops.S_.size();
  if (!ok) return PrecomputedOperators(cfg);
  return ops;
}

std::vector<double> trig_upsample(std::span<const double> values, int factor) {
  if (factor < 1) throw std::invalid_argument("upsampling factor must be >= 1");
  const std::size_t n = values.size();
  if (factor == 1 || n == 0) return {values.begin(), values.end()};

  const std::size_t fine = n * static_cast<std::size_t>(factor);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(values.begin(), values.end());
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);

  // Bins 0..ceil(n/2)-1 are the non-negative frequencies; the rest are the
  // negative ones and go to the top of the padded spectrum.
  std::vector<std::complex<double>> padded(fine, {0.0, 0.0});
  const std::size_t pos = (n + 1) / 2;
  for (std::size_t k = 0; k < pos; ++k) padded[k] = spec[k];
  for (std::size_t k = pos; k < n; ++k) padded[fine - n + k] = spec[k];
  if (n % 2 == 0) {
    const std::complex<double> nyq = spec[n / 2];
    padded[n / 2] = 0.5 * nyq;
    padded[fine - n / 2] = 0.5 * nyq;
  }

  std::vector<std::complex<double>> time;
  fft.inv(time, padded);
  std::vector<double> out(fine);
  for (std::size_t i = 0; i < fine; ++i) out[i] = time[i].real() * factor;
  return out;
}

}  // namespace fediff
