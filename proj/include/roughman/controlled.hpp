#pragma once

// Controlled rough paths (Y, Y') over a reference rough path, the rough
// integral as a compensated Riemann sum, and a grid check of the rough Ito
// formula.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "roughman/error.hpp"
#include "roughman/linalg.hpp"
#include "roughman/roughpath.hpp"

namespace roughman {

/// W-valued path with Gubinelli derivative Y'_t in L(V, W) (w x d).
struct ControlledPath {
  std::shared_ptr<const RoughPath> base;
  std::vector<Vec> values;
  std::vector<Mat> gubinelli;
};

/// L(V, W)-valued integrand. Its Gubinelli derivative lives in
/// L(V, L(V, W)) ~ L(V (x) V, W), stored as w x d^2 with column v*d + w.
struct OperatorPath {
  std::shared_ptr<const RoughPath> base;
  std::vector<Mat> values;
  std::vector<Mat> gubinelli;
};

namespace detail {

inline void check_grid(std::size_t points, const RoughPath& p, const char* what) {
  if (points != p.steps() + 1) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": " + std::to_string(points) +
                                              " grid values for a path with " + std::to_string(p.steps()) + " steps");
  }
}

}  // namespace detail

/// I(t_i) = sum_{k<i} Y_{t_k} X_{t_k,t_{k+1}} + Y'_{t_k} XX_{t_k,t_{k+1}}.
/// The result is returned with Y as its Gubinelli derivative.
inline ControlledPath rough_integral(const OperatorPath& y, const RoughPath& p) {
  if (!y.base || !y.base->same_driver(p)) throw Error(ErrorKind::BaseMismatch, "rough_integral: integrand is controlled by a different path");
  detail::check_grid(y.values.size(), p, "rough_integral");
  detail::check_grid(y.gubinelli.size(), p, "rough_integral");
  const Eigen::Index d = p.dim();
  const Eigen::Index w = y.values.front().rows();
  for (std::size_t k = 0; k < y.values.size(); ++k) {
    if (y.values[k].rows() != w || y.values[k].cols() != d || y.gubinelli[k].rows() != w ||
        y.gubinelli[k].cols() != d * d) {
      throw Error(ErrorKind::ShapeMismatch, "rough_integral: integrand shapes must be w x d and w x d^2");
    }
  }
  ControlledPath out{y.base, {}, y.values};
  out.values.reserve(p.steps() + 1);
  Vec acc = Vec::Zero(w);
  out.values.push_back(acc);
  for (std::size_t k = 0; k < p.steps(); ++k) {
    acc += y.values[k] * p.increment(k) + apply_bilinear(y.gubinelli[k], p.area(k));
    out.values.push_back(acc);
  }
  return out;
}

/// Grid proxy for the 2alpha-Hoelder seminorm of R_{s,t} = Y_{s,t} - Y'_s X_{s,t}.
inline double remainder_seminorm(const ControlledPath& y) {
  const RoughPath& p = *y.base;
  detail::check_grid(y.values.size(), p, "remainder_seminorm");
  double worst = 0.0;
  for (std::size_t i = 0; i < p.steps(); ++i) {
    for (std::size_t j = i + 1; j <= p.steps(); ++j) {
      const Vec r = (y.values[j] - y.values[i]) - y.gubinelli[i] * p.increment(i, j);
      worst = std::max(worst, r.norm() / std::pow(p.time(j) - p.time(i), 2.0 * p.alpha()));
    }
  }
  return worst;
}

/// Smooth map F : R^n -> R^q with its first two derivatives.
struct SmoothMap {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  std::function<Bilinear(const Vec&)> hessian;
};

/// A path of the form Y_t = Y_0 + int Y' dX + Gamma_t: (Y, Y') with the
/// derivative Y'' of Y' (n x d^2) and grid samples of Gamma.
struct ItoInputs {
  ControlledPath y;
  std::vector<Mat> second;
  std::vector<Vec> drift;
};

struct ItoResidual {
  double residual = 0.0;           // max over the grid
  double bracket_term = 0.0;       // |1/2 int D^2F(Y)(Y',Y') d[X]| at the horizon
};

/// Max over grid times of
///   |F(Y_t) - F(Y_0) - int DF(Y)Y' dX - int DF(Y) dGamma - 1/2 int D^2F(Y)(Y',Y') d[X]|
/// with the rough integral as a compensated Riemann sum and the other two as
/// left-point Riemann-Stieltjes sums. `include_bracket = false` drops the
/// last term, to show what it contributes.
inline ItoResidual ito_formula_residual(const SmoothMap& f, const ItoInputs& in, bool include_bracket = true) {
  if (!in.y.base) throw Error(ErrorKind::BaseMismatch, "ito_formula_residual: missing base path");
  const RoughPath& p = *in.y.base;
  detail::check_grid(in.y.values.size(), p, "ito_formula_residual");
  detail::check_grid(in.y.gubinelli.size(), p, "ito_formula_residual");
  detail::check_grid(in.second.size(), p, "ito_formula_residual");
  detail::check_grid(in.drift.size(), p, "ito_formula_residual");
  const Eigen::Index d = p.dim();
  const Eigen::Index n = in.y.values.front().size();
  const BracketPath br = bracket(p);

  const Vec f0 = f.value(in.y.values.front());
  Vec rough = Vec::Zero(f0.size());
  Vec drift = Vec::Zero(f0.size());
  Vec bracket_sum = Vec::Zero(f0.size());
  ItoResidual out;
  for (std::size_t k = 0; k < p.steps(); ++k) {
    const Vec& yk = in.y.values[k];
    const Mat& dy = in.y.gubinelli[k];
    const Mat& ddy = in.second[k];
    if (yk.size() != n || dy.rows() != n || dy.cols() != d || ddy.rows() != n || ddy.cols() != d * d) {
      throw Error(ErrorKind::ShapeMismatch, "ito_formula_residual: inconsistent shapes at step " + std::to_string(k));
    }
    const Mat jac = f.jacobian(yk);
    const Bilinear hess = f.hessian(yk);
    // Integrand DF(Y)Y' and its Gubinelli derivative D^2F(Y)(Y'.,Y'.) + DF(Y)Y''.
    const Mat integrand = jac * dy;
    Mat integrand_prime = jac * ddy;
    Mat second_order(f0.size(), d * d);
    for (Eigen::Index v = 0; v < d; ++v) {
      for (Eigen::Index w = 0; w < d; ++w) second_order.col(v * d + w) = hess.apply(dy.col(v), dy.col(w));
    }
    integrand_prime += second_order;
    rough += integrand * p.increment(k) + apply_bilinear(integrand_prime, p.area(k));
    drift += jac * (in.drift[k + 1] - in.drift[k]);
    bracket_sum += 0.5 * apply_bilinear(second_order, br.values[k + 1] - br.values[k]);

    Vec r = f.value(in.y.values[k + 1]) - f0 - rough - drift;
    if (include_bracket) r -= bracket_sum;
    out.residual = std::max(out.residual, r.norm());
  }
  out.bracket_term = bracket_sum.norm();
  return out;
}

}  // namespace roughman
