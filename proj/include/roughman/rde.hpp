#pragma once

// Chart-level view of an RDE on a submanifold. With g = ell f(phi) and
//   g0(z) = ell( f0(y) - 1/2 (Df f)(y) x + 1/2 Dphi(z) (Dg g)(z) x ),  y = phi(z),
// the reduced equation dZ = g0(Z) dt + g(Z) dX pushes forward under phi to the
// ambient one whenever the tangency conditions hold.

#include <algorithm>
#include <memory>
#include <optional>
#include <vector>

#include "roughman/chart.hpp"
#include "roughman/fields.hpp"
#include "roughman/manifold.hpp"
#include "roughman/solver.hpp"

namespace roughman {

namespace detail {

struct ChartPoint {
  Vec y;
  Mat dphi;
  Bilinear d2phi;
  Mat g;                // m x d
  std::vector<Mat> dg;  // m x m each, chain rule ell Df_k(y) Dphi(z)
};

inline ChartPoint chart_point(const VectorFieldSet& vf, const Chart& chart, const Vec& z) {
  ChartPoint cp;
  cp.y = chart.phi(z);
  cp.dphi = chart.dphi(z);
  cp.d2phi = chart.d2phi(z);
  cp.g = chart.ell * vf.f(cp.y);
  const std::vector<Mat> dfy = vf.df(cp.y);
  cp.dg.reserve(dfy.size());
  for (const Mat& dfk : dfy) cp.dg.push_back(chart.ell * dfk * cp.dphi);
  return cp;
}

/// (Dg g)(z) as an m x d^2 operator, column v*d + w = Dg_w g_v.
inline Mat reduced_second_order(const ChartPoint& cp) {
  const Eigen::Index d = cp.g.cols();
  Mat out(cp.g.rows(), d * d);
  for (Eigen::Index v = 0; v < d; ++v) {
    for (Eigen::Index w = 0; w < d; ++w) out.col(v * d + w) = cp.dg[static_cast<std::size_t>(w)] * cp.g.col(v);
  }
  return out;
}

}  // namespace detail

/// Reduced coefficients g0, g on R^m. The Jacobians of g come from the chain
/// rule; dg0 and the Hessians of g are assembled as well when the ambient
/// fields supply df0 and d2f.
inline VectorFieldSet chart_reduce(const VectorFieldSet& vf, const Chart& chart, const Tensor2& x) {
  if (vf.n != chart.n) throw Error(ErrorKind::DimMismatch, "chart_reduce: chart and fields live in different spaces");
  if (x.rows() != vf.d || x.cols() != vf.d) throw Error(ErrorKind::DimMismatch, "chart_reduce: x must be d x d");
  if (!is_symmetric(x)) throw Error(ErrorKind::NotSymmetric, "chart_reduce: x must be symmetric");
  for (const Vec& z : chart.probes) {
    if (!chart.in_domain(z)) throw Error(ErrorKind::ChartDomain, chart.name + ": probe point outside the chart box");
  }
  const Eigen::Index m = chart.m;
  const Eigen::Index d = vf.d;
  const Vec flat_x = flatten(x);

  VectorFieldSet red;
  red.n = m;
  red.d = d;
  red.f = [vf, chart](const Vec& z) -> Mat { return chart.ell * vf.f(chart.phi(z)); };
  red.df = [vf, chart](const Vec& z) { return detail::chart_point(vf, chart, z).dg; };
  red.f0 = [vf, chart, x, flat_x](const Vec& z) -> Vec {
    const detail::ChartPoint cp = detail::chart_point(vf, chart, z);
    const Vec ambient = vf.f0(cp.y) - 0.5 * apply_bilinear(vf.second_order(cp.y), x) +
                        0.5 * cp.dphi * (detail::reduced_second_order(cp) * flat_x);
    return chart.ell * ambient;
  };

  if (!vf.d2f) return red;

  // Hessian of g_w along (a, e): ell( D^2 f_w(y)(Dphi a, Dphi e) + Df_w(y) D^2phi(a, e) ).
  auto reduced_hessian = [vf, chart, m](const Vec& z, const detail::ChartPoint& cp) {
    const std::vector<Mat> dfy = vf.df(cp.y);
    const std::vector<Bilinear> d2fy = vf.d2f(cp.y);
    std::vector<Bilinear> out;
    for (std::size_t w = 0; w < dfy.size(); ++w) {
      Bilinear h = Bilinear::zero(m, m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index e = 0; e < m; ++e) {
          const Vec ea = Vec::Unit(m, a);
          const Vec ee = Vec::Unit(m, e);
          const Vec val = chart.ell * (d2fy[w].apply(cp.dphi * ea, cp.dphi * ee) + dfy[w] * cp.d2phi.apply(ea, ee));
          for (Eigen::Index i = 0; i < m; ++i) h.parts[static_cast<std::size_t>(i)](a, e) = val(i);
        }
      }
      out.push_back(std::move(h));
    }
    (void)z;
    return out;
  };
  red.d2f = [vf, chart, reduced_hessian](const Vec& z) {
    return reduced_hessian(z, detail::chart_point(vf, chart, z));
  };

  if (!vf.df0) return red;

  red.df0 = [vf, chart, x, flat_x, m, d, reduced_hessian](const Vec& z) -> Mat {
    const detail::ChartPoint cp = detail::chart_point(vf, chart, z);
    const Mat fy = vf.f(cp.y);
    const std::vector<Mat> dfy = vf.df(cp.y);
    const std::vector<Bilinear> d2fy = vf.d2f(cp.y);
    const std::vector<Bilinear> d2g = reduced_hessian(z, cp);
    const Mat df0y = vf.df0(cp.y);
    const Vec u = detail::reduced_second_order(cp) * flat_x;
    Mat out(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Vec ea = Vec::Unit(m, a);
      const Vec b = cp.dphi * ea;
      Vec dc = Vec::Zero(vf.n);
      Vec du = Vec::Zero(m);
      for (Eigen::Index v = 0; v < d; ++v) {
        for (Eigen::Index w = 0; w < d; ++w) {
          const double xvw = x(v, w);
          if (xvw == 0.0) continue;
          const auto vi = static_cast<std::size_t>(v);
          const auto wi = static_cast<std::size_t>(w);
          dc += xvw * (d2fy[wi].apply(b, fy.col(v)) + dfy[wi] * (dfy[vi] * b));
          du += xvw * (d2g[wi].apply(ea, cp.g.col(v)) + cp.dg[wi] * (cp.dg[vi] * ea));
        }
      }
      out.col(a) = chart.ell * (df0y * b - 0.5 * dc + 0.5 * (cp.d2phi.apply(ea, u) + cp.dphi * du));
    }
    return out;
  };
  return red;
}

/// |Df(y) f(y) - Dphi(z) (Dg g)(z) - D^2phi(z)(g(z), g(z))| (Frobenius) at
/// y = phi(z), all terms in L(V (x) V, R^n). Requires f(phi(z)) = Dphi(z) g(z).
inline double decomposition_residual(const VectorFieldSet& vf, const Chart& chart, const Vec& z) {
  const detail::ChartPoint cp = detail::chart_point(vf, chart, z);
  const Mat fy = vf.f(cp.y);
  if ((fy - cp.dphi * cp.g).norm() > 1e-8 * std::max(1.0, fy.norm())) {
    throw Error(ErrorKind::Precondition, "decomposition_residual: f(phi(z)) != Dphi(z) g(z) at this probe");
  }
  const Eigen::Index d = vf.d;
  Mat rhs = cp.dphi * detail::reduced_second_order(cp);
  for (Eigen::Index v = 0; v < d; ++v) {
    for (Eigen::Index w = 0; w < d; ++w) rhs.col(v * d + w) += cp.d2phi.apply(cp.g.col(v), cp.g.col(w));
  }
  return (vf.second_order(cp.y) - rhs).norm();
}

struct ReductionGap {
  double gap = 0.0;                        // max |phi(Z_t) - Y_t| over the window
  bool exited = false;                     // Z left the chart box
  std::optional<std::size_t> exit_index;   // first grid index outside the box
  std::size_t window = 0;                  // number of grid points compared
};

/// Solves the reduced equation from ell(xi) and the ambient one from xi on the
/// same driver and compares phi(Z) with Y up to the chart exit (and t_max).
inline ReductionGap reduced_vs_ambient(const VectorFieldSet& vf, const Chart& chart,
                                       const std::shared_ptr<const RoughPath>& p, const Vec& xi, const Tensor2& x,
                                       std::optional<double> t_max = std::nullopt) {
  const Vec eta = chart.local(xi);
  if (!chart.in_domain(eta) || (chart.phi(eta) - xi).norm() > 1e-10) {
    throw Error(ErrorKind::ChartDomain, "reduced_vs_ambient: initial condition is not on the chart image");
  }
  if (!check_invariance(vf, chart, x, kTangencyCrossCheck).invariant) {
    throw Error(ErrorKind::Precondition, "reduced_vs_ambient: tangency conditions fail for this chart");
  }
  const VectorFieldSet red = chart_reduce(vf, chart, x);
  SolveOptions reduced_opts;
  reduced_opts.stop = [&chart](const Vec& z) { return !chart.in_domain(z); };
  const RDESolution reduced = solve(red, p, eta, reduced_opts);
  const RDESolution ambient = solve(vf, p, xi);

  ReductionGap out;
  out.exited = reduced.stopped_at.has_value();
  out.exit_index = reduced.stopped_at;
  for (std::size_t i = 0; i < reduced.points(); ++i) {
    if (t_max && p->time(i) > *t_max) break;
    out.gap = std::max(out.gap, (chart.phi(reduced.values()[i]) - ambient.values()[i]).norm());
    out.window = i + 1;
  }
  return out;
}

}  // namespace roughman
