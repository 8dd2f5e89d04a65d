#pragma once

// Tangency conditions for invariance of a submanifold under
// dY = f0(Y) dt + f(Y) dX with [X]_t = x t:
//   f(y) v in T_y M for all v, and
//   f0(y) - 1/2 (Df f)(y) x in T_y M.
// With x = 0 (weakly geometric drivers) the drift condition is f0(y) in T_y M.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "roughman/chart.hpp"
#include "roughman/csv.hpp"
#include "roughman/fields.hpp"
#include "roughman/solver.hpp"

namespace roughman {

struct TangencyResidual {
  double least_squares = 0.0;  // |v - dphi pinv(dphi) v|
  double rebuild = 0.0;        // |v - dphi ell v|
};

inline TangencyResidual tangency_residuals(const Chart& chart, const Vec& z, const Vec& v) {
  if (!chart.in_domain(z)) throw Error(ErrorKind::OutOfDomain, chart.name + ": tangency probe outside the chart box");
  if (v.size() != chart.n) throw Error(ErrorKind::DimMismatch, "tangency_residual: vector is not ambient");
  const Mat j = chart.dphi(z);
  TangencyResidual r;
  r.least_squares = (v - j * pinv_apply(j, v)).norm();
  r.rebuild = (v - j * (chart.ell * v)).norm();
  return r;
}

inline constexpr double kTangencyCrossCheck = 1e-8;

/// Distance from v to T_y M, y = phi(z). When v is tangent the answer is
/// cross-checked against the reconstruction w = dphi(z) ell(w).
inline double tangency_residual(const Chart& chart, const Vec& z, const Vec& v) {
  const TangencyResidual r = tangency_residuals(chart, z, v);
  if (r.least_squares <= kTangencyCrossCheck && std::abs(r.least_squares - r.rebuild) > kTangencyCrossCheck) {
    throw Error(ErrorKind::Mismatch, chart.name + ": ell fails to rebuild a tangent vector (" +
                                         std::to_string(r.rebuild) + ")");
  }
  return r.least_squares;
}

/// f0(y) - 1/2 sum_{j,k} x_jk Df_k(y) f_j(y). With eigenvalues given, x must be
/// diag(lambdas) and the diagonal series form is evaluated as a cross-check.
inline Vec corrected_drift(const VectorFieldSet& vf, const Vec& y, const Tensor2& x,
                           const std::optional<std::vector<double>>& lambdas = std::nullopt) {
  if (x.rows() != vf.d || x.cols() != vf.d) throw Error(ErrorKind::DimMismatch, "corrected_drift: x must be d x d");
  if (!is_symmetric(x)) throw Error(ErrorKind::NotSymmetric, "corrected_drift: x must be symmetric");
  const Vec out = vf.f0(y) - 0.5 * apply_bilinear(vf.second_order(y), x);
  if (lambdas) {
    if (static_cast<Eigen::Index>(lambdas->size()) != vf.d) throw Error(ErrorKind::LambdaMismatch, "corrected_drift: wrong eigenvalue count");
    Tensor2 diag = Tensor2::Zero(vf.d, vf.d);
    for (Eigen::Index k = 0; k < vf.d; ++k) diag(k, k) = (*lambdas)[static_cast<std::size_t>(k)];
    if ((x - diag).cwiseAbs().maxCoeff() > 1e-12) throw Error(ErrorKind::LambdaMismatch, "corrected_drift: x is not diag(lambda)");
    const Mat fy = vf.f(y);
    const std::vector<Mat> dfy = vf.df(y);
    Vec series = vf.f0(y);
    for (Eigen::Index k = 0; k < vf.d; ++k) {
      series -= 0.5 * (*lambdas)[static_cast<std::size_t>(k)] * (dfy[static_cast<std::size_t>(k)] * fy.col(k));
    }
    if ((series - out).norm() > 1e-12 * std::max(1.0, out.norm())) {
      throw Error(ErrorKind::Mismatch, "corrected_drift: series form disagrees with the tensor form");
    }
  }
  return out;
}

struct VerdictEntry {
  std::size_t probe = 0;
  Vec z;
  int condition = -1;  // -1: drift, k >= 0: noise direction k
  double residual = 0.0;
};

struct Verdict {
  std::vector<VerdictEntry> vol_residuals;
  std::vector<VerdictEntry> drift_residuals;
  bool corrected = false;
  bool invariant = false;
  double tol = 0.0;
  double max_residual = 0.0;
  double max_drift_residual = 0.0;
  double max_vol_residual = 0.0;
};

inline Verdict check_invariance(const VectorFieldSet& vf, const Chart& chart, const Tensor2& x, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Precondition, "check_invariance: tol must be positive");
  if (vf.n != chart.n) throw Error(ErrorKind::DimMismatch, "check_invariance: chart and fields live in different spaces");
  Verdict v;
  v.tol = tol;
  v.corrected = x.cwiseAbs().maxCoeff() > 0.0;
  for (std::size_t i = 0; i < chart.probes.size(); ++i) {
    const Vec& z = chart.probes[i];
    const Vec y = chart.phi(z);
    const Mat fy = vf.f(y);
    for (Eigen::Index k = 0; k < vf.d; ++k) {
      const double r = tangency_residual(chart, z, fy.col(k));
      v.vol_residuals.push_back({i, z, static_cast<int>(k), r});
      v.max_vol_residual = std::max(v.max_vol_residual, r);
    }
    const double r = tangency_residual(chart, z, corrected_drift(vf, y, x));
    v.drift_residuals.push_back({i, z, -1, r});
    v.max_drift_residual = std::max(v.max_drift_residual, r);
  }
  v.max_residual = std::max(v.max_vol_residual, v.max_drift_residual);
  v.invariant = v.max_residual <= tol;
  return v;
}

inline void write_verdict(std::ostream& out, const Verdict& v) {
  auto line = [&](const VerdictEntry& e) {
    out << "probe=" << e.probe << " z=";
    for (Eigen::Index i = 0; i < e.z.size(); ++i) out << (i ? ";" : "") << csv::format(e.z(i));
    out << " condition=" << (e.condition < 0 ? std::string("drift") : "vol_" + std::to_string(e.condition + 1))
        << " residual=" << csv::format(e.residual) << '\n';
  };
  // Grouped per probe: every noise direction, then the drift.
  std::size_t vol = 0;
  for (const VerdictEntry& drift : v.drift_residuals) {
    while (vol < v.vol_residuals.size() && v.vol_residuals[vol].probe == drift.probe) line(v.vol_residuals[vol++]);
    line(drift);
  }
  out << "VERDICT invariant=" << (v.invariant ? "true" : "false") << " max_residual=" << csv::format(v.max_residual)
      << " tol=" << csv::format(v.tol) << '\n';
}

struct DistanceReport {
  std::vector<double> proxy;                 // |Y - phi(ell Y)|
  std::optional<std::vector<double>> exact;  // implicit defect, when known
  std::optional<std::size_t> chart_exit;     // first index with ell(Y) outside the box

  /// Exact defect when known, otherwise the proxy up to the chart exit.
  double max_defect() const {
    double worst = 0.0;
    if (exact) {
      for (double e : *exact) worst = std::max(worst, e);
      return worst;
    }
    const std::size_t end = chart_exit.value_or(proxy.size());
    for (std::size_t i = 0; i < end; ++i) worst = std::max(worst, proxy[i]);
    return worst;
  }

  double defect_at(std::size_t i) const { return exact ? (*exact)[i] : proxy[i]; }
};

inline DistanceReport distance_monitor(const std::vector<Vec>& trajectory, const Chart& chart) {
  DistanceReport r;
  r.proxy.reserve(trajectory.size());
  if (chart.implicit_defect) r.exact.emplace();
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const Vec& y = trajectory[i];
    const Vec z = chart.local(y);
    if (!r.chart_exit && !chart.in_domain(z)) r.chart_exit = i;
    r.proxy.push_back((y - chart.phi(z)).norm());
    if (r.exact) r.exact->push_back(chart.implicit_defect(y));
  }
  return r;
}

inline DistanceReport distance_monitor(const RDESolution& sol, const Chart& chart) {
  return distance_monitor(sol.values(), chart);
}

}  // namespace roughman
