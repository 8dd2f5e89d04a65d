#pragma once

// Level-2 rough paths sampled on a uniform grid t_i = i * dt.
//
// The second level is stored per grid step only; the iterated integral over a
// longer interval is rebuilt with Chen's relation
//   XX_{s,u} = XX_{s,t} + XX_{t,u} + X_{s,t} (x) X_{t,u}.
// Tensor convention: XX^{jk}_{s,t} = int_s^t X^j_{s,r} dX^k_r.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "roughman/error.hpp"
#include "roughman/linalg.hpp"

namespace roughman {

class RoughPath {
 public:
  RoughPath(double dt, std::vector<Vec> values, std::vector<Tensor2> areas, double alpha)
      : dt_(dt), values_(std::move(values)), areas_(std::move(areas)), alpha_(alpha) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw Error(ErrorKind::Precondition, "RoughPath: dt must be positive");
    if (values_.size() < 2) throw Error(ErrorKind::Precondition, "RoughPath: need at least one step");
    if (areas_.size() + 1 != values_.size()) {
      throw Error(ErrorKind::DimMismatch, "RoughPath: " + std::to_string(values_.size()) + " values but " +
                                              std::to_string(areas_.size()) + " step tensors");
    }
    if (!(alpha_ > 1.0 / 3.0 && alpha_ <= 0.5)) {
      throw Error(ErrorKind::Precondition, "RoughPath: alpha must lie in (1/3, 1/2]");
    }
    const Eigen::Index d = values_.front().size();
    if (d < 1) throw Error(ErrorKind::DimMismatch, "RoughPath: empty values");
    for (const Vec& v : values_) {
      if (v.size() != d) throw Error(ErrorKind::DimMismatch, "RoughPath: ragged values");
      if (!v.allFinite()) throw Error(ErrorKind::NonFinite, "RoughPath: non-finite value");
    }
    for (const Tensor2& a : areas_) {
      if (a.rows() != d || a.cols() != d) throw Error(ErrorKind::DimMismatch, "RoughPath: bad step tensor shape");
      if (!a.allFinite()) throw Error(ErrorKind::NonFinite, "RoughPath: non-finite step tensor");
    }
  }

  double dt() const { return dt_; }
  double alpha() const { return alpha_; }
  std::size_t steps() const { return areas_.size(); }
  Eigen::Index dim() const { return values_.front().size(); }
  double time(std::size_t i) const { return dt_ * static_cast<double>(i); }
  double horizon() const { return time(steps()); }

  const std::vector<Vec>& values() const { return values_; }
  const std::vector<Tensor2>& areas() const { return areas_; }
  const Vec& value(std::size_t i) const { return values_[i]; }
  const Tensor2& area(std::size_t step) const { return areas_[step]; }

  Vec increment(std::size_t step) const { return values_[step + 1] - values_[step]; }
  Vec increment(std::size_t i, std::size_t j) const { return values_[j] - values_[i]; }

  bool same_driver(const RoughPath& other) const {
    if (this == &other) return true;
    if (dt_ != other.dt_ || steps() != other.steps() || dim() != other.dim()) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] != other.values_[i]) return false;
    }
    for (std::size_t i = 0; i < areas_.size(); ++i) {
      if (areas_[i] != other.areas_[i]) return false;
    }
    return true;
  }

 private:
  double dt_;
  std::vector<Vec> values_;
  std::vector<Tensor2> areas_;
  double alpha_;
};

/// Running values [X]_{0,t_i} of the bracket; symmetric by construction.
struct BracketPath {
  double dt;
  std::vector<Tensor2> values;

  double time(std::size_t i) const { return dt * static_cast<double>(i); }
};

inline Tensor2 chen_combine(const Tensor2& area_st, const Tensor2& area_tu, const Vec& inc_st, const Vec& inc_tu) {
  return area_st + area_tu + outer(inc_st, inc_tu);
}

inline Tensor2 chen_reconstruct(const RoughPath& p, std::size_t i, std::size_t j) {
  if (i >= j || j > p.steps()) {
    throw Error(ErrorKind::IndexOrder, "chen_reconstruct: need 0 <= i < j <= N, got i=" + std::to_string(i) +
                                           " j=" + std::to_string(j));
  }
  Tensor2 acc = Tensor2::Zero(p.dim(), p.dim());
  for (std::size_t k = i; k < j; ++k) {
    acc += p.area(k) + outer(p.increment(i, k), p.increment(k));
  }
  return acc;
}

/// Worst disagreement between the two bracketings of three adjacent
/// intervals, and between either and direct accumulation, over a
/// deterministic family of quadruples a < b < c < e.
inline double chen_associativity_defect(const RoughPath& p, std::size_t max_quads = 512) {
  const std::size_t n = p.steps();
  if (n < 3) return 0.0;
  std::vector<std::array<std::size_t, 4>> quads;
  quads.push_back({0, n / 3, (2 * n) / 3, n});
  const std::size_t stride = std::max<std::size_t>(1, (n - 3) / max_quads + 1);
  for (std::size_t a = 0; a + 3 <= n; a += stride) {
    const std::size_t span = std::max<std::size_t>(3, (n - a) / 2);
    const std::size_t e = std::min(n, a + span);
    const std::size_t b = a + std::max<std::size_t>(1, (e - a) / 3);
    const std::size_t c = std::max(b + 1, a + (2 * (e - a)) / 3);
    if (c < e) quads.push_back({a, b, c, e});
    quads.push_back({a, a + 1, a + 2, a + 3});
  }
  double worst = 0.0;
  for (const auto& [a, b, c, e] : quads) {
    const Tensor2 ab = chen_reconstruct(p, a, b);
    const Tensor2 bc = chen_reconstruct(p, b, c);
    const Tensor2 ce = chen_reconstruct(p, c, e);
    const Vec xab = p.increment(a, b);
    const Vec xbc = p.increment(b, c);
    const Vec xce = p.increment(c, e);
    const Tensor2 left = chen_combine(chen_combine(ab, bc, xab, xbc), ce, xab + xbc, xce);
    const Tensor2 right = chen_combine(ab, chen_combine(bc, ce, xbc, xce), xab, xbc + xce);
    const Tensor2 direct = chen_reconstruct(p, a, e);
    worst = std::max({worst, (left - right).norm(), (left - direct).norm(), (right - direct).norm()});
  }
  return worst;
}

inline BracketPath bracket(const RoughPath& p) {
  const Eigen::Index d = p.dim();
  BracketPath out{p.dt(), {}};
  out.values.reserve(p.steps() + 1);
  Tensor2 acc = Tensor2::Zero(d, d);
  out.values.push_back(acc);
  for (std::size_t k = 0; k < p.steps(); ++k) {
    const Vec inc = p.increment(k);
    acc += outer(inc, inc) - 2.0 * sym(p.area(k));
    acc = sym(acc);
    out.values.push_back(acc);
  }
  return out;
}

inline double weak_geometric_defect(const RoughPath& p) {
  double worst = 0.0;
  for (std::size_t k = 0; k < p.steps(); ++k) {
    const Vec inc = p.increment(k);
    worst = std::max(worst, (sym(p.area(k)) - 0.5 * outer(inc, inc)).norm());
  }
  return worst;
}

inline bool is_weakly_geometric(const RoughPath& p, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Precondition, "is_weakly_geometric: tol must be positive");
  return weak_geometric_defect(p) <= tol;
}

/// Grid estimate of the alpha-Hoelder seminorm of X (level 1) or the
/// 2alpha-Hoelder seminorm of XX (level 2) over all grid pairs.
inline double holder_seminorm(const RoughPath& p, int level) {
  if (level != 1 && level != 2) throw Error(ErrorKind::Precondition, "holder_seminorm: level must be 1 or 2");
  const std::size_t n = p.steps();
  const double exponent = level == 1 ? p.alpha() : 2.0 * p.alpha();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor2 acc = Tensor2::Zero(p.dim(), p.dim());
    for (std::size_t j = i + 1; j <= n; ++j) {
      const double scale = std::pow(p.time(j) - p.time(i), exponent);
      double size = 0.0;
      if (level == 1) {
        size = p.increment(i, j).norm();
      } else {
        acc += p.area(j - 1) + outer(p.increment(i, j - 1), p.increment(j - 1));
        size = acc.norm();
      }
      worst = std::max(worst, size / scale);
    }
  }
  return worst;
}

/// Restriction to grid indices [i, j], re-based to start at time 0. Values are
/// copied unchanged so every increment is bit-identical to the original.
inline RoughPath slice(const RoughPath& p, std::size_t i, std::size_t j) {
  if (i >= j || j > p.steps()) throw Error(ErrorKind::IndexOrder, "slice: need 0 <= i < j <= N");
  std::vector<Vec> values(p.values().begin() + static_cast<std::ptrdiff_t>(i),
                          p.values().begin() + static_cast<std::ptrdiff_t>(j) + 1);
  std::vector<Tensor2> areas(p.areas().begin() + static_cast<std::ptrdiff_t>(i),
                             p.areas().begin() + static_cast<std::ptrdiff_t>(j));
  return RoughPath(p.dt(), std::move(values), std::move(areas), p.alpha());
}

/// Merges `factor` consecutive steps into one via Chen's relation.
inline RoughPath coarsen(const RoughPath& p, std::size_t factor) {
  if (factor == 0 || p.steps() % factor != 0) {
    throw Error(ErrorKind::Precondition, "coarsen: factor must divide the step count");
  }
  const std::size_t n = p.steps() / factor;
  std::vector<Vec> values;
  std::vector<Tensor2> areas;
  values.reserve(n + 1);
  areas.reserve(n);
  for (std::size_t i = 0; i <= n; ++i) values.push_back(p.value(i * factor));
  for (std::size_t i = 0; i < n; ++i) areas.push_back(chen_reconstruct(p, i * factor, (i + 1) * factor));
  return RoughPath(p.dt() * static_cast<double>(factor), std::move(values), std::move(areas), p.alpha());
}

/// Builds a rough path from fine-grid increments and per-fine-step tensors,
/// accumulating values from `start` and coarsening by `factor`.
inline RoughPath assemble_from_fine(double fine_dt, const Vec& start, const std::vector<Vec>& increments,
                                    const std::vector<Tensor2>& fine_areas, std::size_t factor, double alpha) {
  if (increments.size() != fine_areas.size() || factor == 0 || increments.size() % factor != 0) {
    throw Error(ErrorKind::DimMismatch, "assemble_from_fine: inconsistent fine data");
  }
  const std::size_t n = increments.size() / factor;
  const Eigen::Index d = start.size();
  std::vector<Vec> values;
  std::vector<Tensor2> areas;
  values.reserve(n + 1);
  areas.reserve(n);
  Vec current = start;
  values.push_back(current);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor2 acc = Tensor2::Zero(d, d);
    Vec partial = Vec::Zero(d);
    for (std::size_t a = i * factor; a < (i + 1) * factor; ++a) {
      acc += fine_areas[a] + outer(partial, increments[a]);
      partial += increments[a];
      current += increments[a];
    }
    areas.push_back(acc);
    values.push_back(current);
  }
  return RoughPath(fine_dt * static_cast<double>(factor), std::move(values), std::move(areas), alpha);
}

enum class RoughnessTrend { Zero, Vanishing, Growing };

inline const char* to_string(RoughnessTrend t) {
  switch (t) {
    case RoughnessTrend::Zero: return "zero";
    case RoughnessTrend::Vanishing: return "vanishing";
    case RoughnessTrend::Growing: return "growing";
  }
  return "unknown";
}

struct RoughnessReport {
  std::vector<double> lags;                 // h = T 2^{-k}, coarse to fine
  std::vector<std::vector<double>> ratios;  // [direction][lag]
  std::vector<RoughnessTrend> trends;       // per direction
  std::vector<double> log_slopes;           // d log(ratio) / d log(h)
};

/// Empirical look at |<v, X_{s,s+h}>| / h^{2 alpha} over dyadic lags at 16
/// evenly spaced base points. Evidence only; nothing here decides roughness.
inline RoughnessReport true_roughness_diagnostic(const RoughPath& p, const std::vector<Vec>& directions,
                                                 double alpha) {
  if (!(alpha > 1.0 / 3.0 && alpha < 0.5)) {
    throw Error(ErrorKind::Precondition, "true_roughness_diagnostic: alpha must lie in (1/3, 1/2)");
  }
  constexpr std::size_t kBasePoints = 16;
  const std::size_t n = p.steps();
  std::vector<std::size_t> lag_steps;
  for (std::size_t k = 1; (n >> k) >= 1; ++k) lag_steps.push_back(n >> k);

  RoughnessReport report;
  for (std::size_t lag : lag_steps) report.lags.push_back(p.time(lag));
  for (const Vec& v : directions) {
    if (v.size() != p.dim() || v.norm() == 0.0) {
      throw Error(ErrorKind::Precondition, "true_roughness_diagnostic: directions must be nonzero and d-dimensional");
    }
    std::vector<double> row;
    for (std::size_t lag : lag_steps) {
      double best = 0.0;
      for (std::size_t b = 0; b < kBasePoints; ++b) {
        const std::size_t s = (b * n) / kBasePoints;
        if (s + lag > n) continue;
        best = std::max(best, std::abs(v.dot(p.increment(s, s + lag))));
      }
      row.push_back(best / std::pow(p.time(lag), 2.0 * alpha));
    }
    // Least-squares slope of log ratio against log lag.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] <= 0.0) continue;
      const double x = std::log(report.lags[k]);
      const double y = std::log(row[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++count;
    }
    double slope = 0.0;
    RoughnessTrend trend = RoughnessTrend::Zero;
    if (count >= 2) {
      slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
      trend = slope < 0.0 ? RoughnessTrend::Growing : RoughnessTrend::Vanishing;
    }
    report.ratios.push_back(std::move(row));
    report.trends.push_back(trend);
    report.log_slopes.push_back(slope);
  }
  return report;
}

}  // namespace roughman
