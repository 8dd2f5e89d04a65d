#pragma once

// A working chart of an m-dimensional submanifold M of R^n: a
// parametrization phi with injective differential on a box O, and a linear
// left inverse ell with phi(ell(y)) = y on the chart image.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "roughman/error.hpp"
#include "roughman/linalg.hpp"

namespace roughman {

struct Chart {
  std::string name;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::function<Vec(const Vec&)> phi;
  std::function<Mat(const Vec&)> dphi;       // n x m
  std::function<Bilinear(const Vec&)> d2phi; // n parts, each m x m
  Mat ell;                                   // m x n
  Vec lower;
  Vec upper;
  std::vector<Vec> probes;
  /// Exact distance to M, when the scenario knows it (e.g. ||y| - 1| on the circle).
  std::function<double(const Vec&)> implicit_defect;

  bool in_domain(const Vec& z) const {
    if (z.size() != m || !z.allFinite()) return false;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (z(i) < lower(i) || z(i) > upper(i)) return false;
    }
    return true;
  }

  Vec local(const Vec& y) const { return ell * y; }
};

/// Tensor grid with `per_axis` points per coordinate inside the box, thinned
/// so the total stays at or below `cap`.
inline std::vector<Vec> tensor_probe_grid(const Vec& lower, const Vec& upper, int per_axis = 9, std::size_t cap = 10000) {
  const Eigen::Index m = lower.size();
  while (per_axis > 1 && std::pow(static_cast<double>(per_axis), static_cast<double>(m)) > static_cast<double>(cap)) {
    --per_axis;
  }
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < m; ++i) total *= static_cast<std::size_t>(per_axis);
  std::vector<Vec> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec z(m);
    std::size_t rest = flat;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto idx = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
      z(i) = per_axis == 1 ? 0.5 * (lower(i) + upper(i))
                           : lower(i) + (upper(i) - lower(i)) * idx / static_cast<double>(per_axis - 1);
    }
    out.push_back(z);
  }
  return out;
}

struct ChartCheck {
  double left_inverse = 0.0;     // max |ell(phi(z)) - z|
  double tangent_rebuild = 0.0;  // max |w - dphi(z) ell(w)| over w = dphi(z) c
  double min_singular = 0.0;     // smallest relative singular value of dphi(z)
};

inline ChartCheck inspect_chart(const Chart& chart) {
  ChartCheck out;
  out.min_singular = 1.0;
  for (const Vec& z : chart.probes) {
    if (!chart.in_domain(z)) throw Error(ErrorKind::ChartDomain, chart.name + ": probe point outside the chart box");
    out.left_inverse = std::max(out.left_inverse, (chart.local(chart.phi(z)) - z).norm());
    const Mat j = chart.dphi(z);
    if (j.rows() != chart.n || j.cols() != chart.m) throw Error(ErrorKind::DimMismatch, chart.name + ": dphi has the wrong shape");
    Eigen::JacobiSVD<Mat> svd(j);
    const Vec& s = svd.singularValues();
    out.min_singular = std::min(out.min_singular, s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0);
    for (Eigen::Index i = 0; i < chart.m; ++i) {
      Vec c = Vec::Constant(chart.m, 0.25);
      c(i) = 1.0;
      const Vec w = j * c;
      out.tangent_rebuild = std::max(out.tangent_rebuild, (w - j * (chart.ell * w)).norm());
    }
  }
  return out;
}

/// Throws unless the left-inverse, immersion and tangent-reconstruction
/// identities hold at every probe point.
inline void validate_chart(const Chart& chart) {
  if (chart.ell.rows() != chart.m || chart.ell.cols() != chart.n || chart.lower.size() != chart.m ||
      chart.upper.size() != chart.m) {
    throw Error(ErrorKind::DimMismatch, chart.name + ": inconsistent chart shapes");
  }
  const ChartCheck c = inspect_chart(chart);
  if (c.left_inverse > 1e-10) throw Error(ErrorKind::Precondition, chart.name + ": ell is not a left inverse of phi");
  if (c.min_singular <= kRankTolerance) throw Error(ErrorKind::RankDeficient, chart.name + ": dphi is not injective");
  if (c.tangent_rebuild > 1e-10) throw Error(ErrorKind::Precondition, chart.name + ": ell does not rebuild tangent vectors");
}

}  // namespace roughman
