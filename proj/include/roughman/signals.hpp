#pragma once

// Driving signals: the Ito-enhanced and geometric lifts of a truncated
// Q-Wiener / Q-fractional Brownian motion X_t = sum_k sqrt(lambda_k) beta^k_t e_k,
// plus deterministic test signals. Everything is generated on a fine grid of
// N * R steps and coarsened to N steps through Chen's relation.

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "roughman/error.hpp"
#include "roughman/linalg.hpp"
#include "roughman/rng.hpp"
#include "roughman/roughpath.hpp"

namespace roughman {

struct QSpec {
  std::vector<double> lambdas;
  double hurst = 0.5;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(lambdas.size()); }

  Tensor2 covariance() const {
    Tensor2 q = Tensor2::Zero(dim(), dim());
    for (Eigen::Index k = 0; k < dim(); ++k) q(k, k) = lambdas[static_cast<std::size_t>(k)];
    return q;
  }

  void validate() const {
    if (lambdas.empty()) throw Error(ErrorKind::Precondition, "QSpec: need at least one eigenvalue");
    for (double l : lambdas) {
      if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorKind::Precondition, "QSpec: eigenvalues must be positive");
    }
    if (!(hurst > 1.0 / 3.0 && hurst <= 0.5)) throw Error(ErrorKind::BadHurst, "QSpec: Hurst index outside (1/3, 1/2]");
  }
};

struct SignalConfig {
  double horizon = 1.0;
  std::size_t steps = 256;
  std::size_t refine = 16;
  std::uint64_t seed = 0;

  std::size_t fine_steps() const { return steps * refine; }
  double fine_dt() const { return horizon / static_cast<double>(fine_steps()); }

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorKind::Precondition, "SignalConfig: horizon must be positive");
    if (steps < 2) throw Error(ErrorKind::Precondition, "SignalConfig: need N >= 2");
    if (refine < 16 || (refine & (refine - 1)) != 0) {
      throw Error(ErrorKind::Precondition, "SignalConfig: refine must be a power of two >= 16");
    }
  }
};

namespace detail {

// Stream purposes keep the different generators' normals disjoint.
inline constexpr std::uint32_t kWienerPurpose = 1;
inline constexpr std::uint32_t kFbmCholeskyPurpose = 2;
inline constexpr std::uint32_t kFbmCirculantPurpose = 3;

inline double fbm_alpha(double hurst) { return 0.5 * (1.0 / 3.0 + hurst); }

inline std::vector<Vec> fine_increments_from_components(const std::vector<std::vector<double>>& comps) {
  const std::size_t m = comps.front().size();
  const auto d = static_cast<Eigen::Index>(comps.size());
  std::vector<Vec> inc(m, Vec(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    for (std::size_t a = 0; a < m; ++a) inc[a](k) = comps[static_cast<std::size_t>(k)][a];
  }
  return inc;
}

inline std::vector<Tensor2> geometric_fine_areas(const std::vector<Vec>& inc) {
  std::vector<Tensor2> areas;
  areas.reserve(inc.size());
  for (const Vec& v : inc) areas.push_back(0.5 * outer(v, v));
  return areas;
}

struct FbmKey {
  double hurst;
  std::size_t m;
  double dt;
  auto operator<=>(const FbmKey&) const = default;
};

/// Lower Cholesky factor of Cov(B_{t_a}, B_{t_b}) on t_a = a dt, a = 1..m.
inline std::shared_ptr<const Mat> fbm_cholesky(double hurst, std::size_t m, double dt) {
  static std::mutex mutex;
  static std::map<FbmKey, std::shared_ptr<const Mat>> cache;
  const FbmKey key{hurst, m, dt};
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const auto n = static_cast<Eigen::Index>(m);
  const double h2 = 2.0 * hurst;
  Mat cov(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const double s = dt * static_cast<double>(a + 1);
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double t = dt * static_cast<double>(b + 1);
      const double c = 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
      cov(a, b) = c;
      cov(b, a) = c;
    }
  }
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Precondition, "fbm covariance is not positive definite");
  auto factor = std::make_shared<const Mat>(llt.matrixL());
  cache.emplace(key, factor);
  return factor;
}

/// Eigenvalues of the 2m-circulant embedding of the fractional Gaussian noise
/// autocovariance (increment variance dt^{2H}).
inline std::shared_ptr<const std::vector<double>> fgn_circulant_eigenvalues(double hurst, std::size_t m, double dt) {
  static std::mutex mutex;
  static std::map<FbmKey, std::shared_ptr<const std::vector<double>>> cache;
  const FbmKey key{hurst, m, dt};
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const double h2 = 2.0 * hurst;
  const double scale = 0.5 * std::pow(dt, h2);
  auto gamma = [&](double k) {
    return scale * (std::pow(std::abs(k + 1.0), h2) - 2.0 * std::pow(std::abs(k), h2) + std::pow(std::abs(k - 1.0), h2));
  };
  const std::size_t len = 2 * m;
  std::vector<std::complex<double>> row(len);
  for (std::size_t k = 0; k <= m; ++k) row[k] = gamma(static_cast<double>(k));
  for (std::size_t k = m + 1; k < len; ++k) row[k] = gamma(static_cast<double>(len - k));
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, row);
  auto eig = std::make_shared<std::vector<double>>(len);
  double largest = 0.0;
  for (const auto& z : spectrum) largest = std::max(largest, std::abs(z.real()));
  for (std::size_t j = 0; j < len; ++j) {
    const double e = spectrum[j].real();
    if (e < -1e-10 * largest) throw Error(ErrorKind::Precondition, "fgn circulant embedding is not nonnegative");
    (*eig)[j] = std::max(e, 0.0);
  }
  cache.emplace(key, eig);
  return eig;
}

}  // namespace detail

enum class FbmMethod { Auto, Cholesky, Circulant };

/// Fine-grid sizes up to this use the Cholesky factor of the exact covariance.
inline constexpr std::size_t kCholeskyMaxSteps = 1024;

/// Exact samples of one standard fBm on t_a = a dt, a = 0..m, returned as the
/// m increments.
inline std::vector<double> fbm_increments(double hurst, std::size_t m, double dt, std::uint64_t seed,
                                          std::uint32_t stream, FbmMethod method = FbmMethod::Auto) {
  if (method == FbmMethod::Auto) method = m <= kCholeskyMaxSteps ? FbmMethod::Cholesky : FbmMethod::Circulant;
  std::vector<double> inc(m);
  if (method == FbmMethod::Cholesky) {
    const auto factor = detail::fbm_cholesky(hurst, m, dt);
    const NormalStream normals(seed, stream, detail::kFbmCholeskyPurpose);
    Vec z(static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a) z(static_cast<Eigen::Index>(a)) = normals.normal(a);
    const Vec path = factor->triangularView<Eigen::Lower>() * z;
    double prev = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      inc[a] = path(static_cast<Eigen::Index>(a)) - prev;
      prev = path(static_cast<Eigen::Index>(a));
    }
    return inc;
  }
  const auto eig = detail::fgn_circulant_eigenvalues(hurst, m, dt);
  const std::size_t len = eig->size();
  const NormalStream normals(seed, stream, detail::kFbmCirculantPurpose);
  std::vector<std::complex<double>> weights(len);
  const double inv_len = 1.0 / static_cast<double>(len);
  for (std::size_t j = 0; j < len; ++j) {
    const double amp = std::sqrt((*eig)[j] * inv_len);
    weights[j] = amp * std::complex<double>(normals.normal(2 * j), normals.normal(2 * j + 1));
  }
  std::vector<std::complex<double>> sample;
  Eigen::FFT<double> fft;
  fft.fwd(sample, weights);
  for (std::size_t a = 0; a < m; ++a) inc[a] = sample[a].real();
  return inc;
}

inline constexpr double kItoAlpha = 0.45;

/// Ito lift of a truncated Q-Wiener process. Within one fine step the
/// symmetric part of the area is the exact Ito value
/// 1/2 dX (x) dX - 1/2 Q dt; the Levy area across fine steps comes from the
/// left-point sums that Chen's relation produces when coarsening.
inline RoughPath ito_wiener_lift(const QSpec& q, const SignalConfig& c) {
  q.validate();
  c.validate();
  if (q.hurst != 0.5) throw Error(ErrorKind::BadHurst, "ito_wiener_lift requires H = 1/2");
  const std::size_t m = c.fine_steps();
  const double dt = c.fine_dt();
  const Eigen::Index d = q.dim();
  std::vector<std::vector<double>> comps(static_cast<std::size_t>(d), std::vector<double>(m));
  for (Eigen::Index k = 0; k < d; ++k) {
    const NormalStream normals(c.seed, static_cast<std::uint32_t>(k), detail::kWienerPurpose);
    const double scale = std::sqrt(q.lambdas[static_cast<std::size_t>(k)] * dt);
    for (std::size_t a = 0; a < m; ++a) comps[static_cast<std::size_t>(k)][a] = scale * normals.normal(a);
  }
  const std::vector<Vec> inc = detail::fine_increments_from_components(comps);
  const Tensor2 correction = 0.5 * dt * q.covariance();
  std::vector<Tensor2> areas;
  areas.reserve(m);
  for (const Vec& v : inc) areas.push_back(0.5 * outer(v, v) - correction);
  return assemble_from_fine(dt, Vec::Zero(d), inc, areas, c.refine, kItoAlpha);
}

/// Piecewise-linear (hence weakly geometric) lift of a truncated Q-fBm.
inline RoughPath geometric_fbm_lift(const QSpec& q, const SignalConfig& c, FbmMethod method = FbmMethod::Auto) {
  q.validate();
  c.validate();
  const std::size_t m = c.fine_steps();
  const double dt = c.fine_dt();
  const Eigen::Index d = q.dim();
  std::vector<std::vector<double>> comps;
  for (Eigen::Index k = 0; k < d; ++k) {
    auto beta = fbm_increments(q.hurst, m, dt, c.seed, static_cast<std::uint32_t>(k), method);
    const double scale = std::sqrt(q.lambdas[static_cast<std::size_t>(k)]);
    for (double& b : beta) b *= scale;
    comps.push_back(std::move(beta));
  }
  const std::vector<Vec> inc = detail::fine_increments_from_components(comps);
  return assemble_from_fine(dt, Vec::Zero(d), inc, detail::geometric_fine_areas(inc), c.refine,
                            detail::fbm_alpha(q.hurst));
}

/// X = 0 with per-step area -1/2 (t - s) x, so that [X]_t = x t exactly.
inline RoughPath pure_area_path(const Tensor2& x, double horizon, std::size_t steps) {
  if (x.rows() != x.cols() || x.rows() == 0) throw Error(ErrorKind::DimMismatch, "pure_area_path: x must be square");
  if (!is_symmetric(x)) throw Error(ErrorKind::NotSymmetric, "pure_area_path: x must be symmetric");
  if (steps < 1 || !(horizon > 0.0)) throw Error(ErrorKind::Precondition, "pure_area_path: bad grid");
  const double dt = horizon / static_cast<double>(steps);
  std::vector<Vec> values(steps + 1, Vec::Zero(x.rows()));
  std::vector<Tensor2> areas(steps, Tensor2(-0.5 * dt * x));
  return RoughPath(dt, std::move(values), std::move(areas), 0.5);
}

/// Canonical lift of a path given by its samples on the fine grid of `c`
/// (N * R + 1 points).
inline RoughPath smooth_lift(const std::vector<Vec>& fine_samples, const SignalConfig& c) {
  c.validate();
  if (fine_samples.size() != c.fine_steps() + 1) {
    throw Error(ErrorKind::DimMismatch, "smooth_lift: expected " + std::to_string(c.fine_steps() + 1) + " samples");
  }
  std::vector<Vec> inc;
  inc.reserve(c.fine_steps());
  for (std::size_t a = 0; a < c.fine_steps(); ++a) inc.push_back(fine_samples[a + 1] - fine_samples[a]);
  return assemble_from_fine(c.fine_dt(), fine_samples.front(), inc, detail::geometric_fine_areas(inc), c.refine, 0.5);
}

inline RoughPath smooth_lift(const std::function<Vec(double)>& path, const SignalConfig& c) {
  std::vector<Vec> samples;
  samples.reserve(c.fine_steps() + 1);
  for (std::size_t a = 0; a <= c.fine_steps(); ++a) samples.push_back(path(c.fine_dt() * static_cast<double>(a)));
  return smooth_lift(samples, c);
}

}  // namespace roughman
