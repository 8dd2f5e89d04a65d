#pragma once

// Coefficients f0 : R^n -> R^n and f : R^n -> L(R^d, R^n) of
// dY = f0(Y) dt + f(Y) dX, with analytic derivatives.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "roughman/error.hpp"
#include "roughman/linalg.hpp"

namespace roughman {

struct VectorFieldSet {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::function<Vec(const Vec&)> f0;
  std::function<Mat(const Vec&)> df0;                   // optional
  std::function<Mat(const Vec&)> f;                     // n x d, column k is f_k(y) = f(y) e_k
  std::function<std::vector<Mat>(const Vec&)> df;       // df(y)[k] = Jacobian of f_k
  std::function<std::vector<Bilinear>(const Vec&)> d2f; // optional, d2f(y)[k] = Hessian of f_k

  /// (Df f)(y) in L(V (x) V, R^n): column v*d + w is Df_w(y) f_v(y).
  Mat second_order(const Vec& y) const {
    const Mat fy = f(y);
    const std::vector<Mat> dfy = df(y);
    Mat out(n, d * d);
    for (Eigen::Index v = 0; v < d; ++v) {
      for (Eigen::Index w = 0; w < d; ++w) out.col(v * d + w) = dfy[static_cast<std::size_t>(w)] * fy.col(v);
    }
    return out;
  }
};

/// Central-difference Jacobian of a map R^n -> R^q.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& y, double h = 1e-6) {
  const Vec g0 = g(y);
  Mat jac(g0.size(), y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(y(i)));
    Vec plus = y, minus = y;
    plus(i) += step;
    minus(i) -= step;
    jac.col(i) = (g(plus) - g(minus)) / (2.0 * step);
  }
  return jac;
}

/// Largest gap between the supplied df (and df0, when present) and central
/// differences, over the given probe points.
inline double derivative_check(const VectorFieldSet& vf, const std::vector<Vec>& probes) {
  double worst = 0.0;
  for (const Vec& y : probes) {
    const std::vector<Mat> dfy = vf.df(y);
    for (Eigen::Index k = 0; k < vf.d; ++k) {
      const auto column = [&](const Vec& z) -> Vec { return vf.f(z).col(k); };
      worst = std::max(worst, (dfy[static_cast<std::size_t>(k)] - fd_jacobian(column, y)).cwiseAbs().maxCoeff());
    }
    if (vf.df0) worst = std::max(worst, (vf.df0(y) - fd_jacobian(vf.f0, y)).cwiseAbs().maxCoeff());
  }
  return worst;
}

inline void validate_derivatives(const VectorFieldSet& vf, const std::vector<Vec>& probes, double tol = 1e-5) {
  const double err = derivative_check(vf, probes);
  if (!(err <= tol)) {
    throw Error(ErrorKind::Precondition, "vector field derivatives disagree with finite differences by " + std::to_string(err));
  }
}

/// Affine fields f_k(y) = A_k y + b_k, f0(y) = C y + c with exact derivatives.
inline VectorFieldSet affine_fields(const Mat& drift, const Vec& drift_shift, const std::vector<Mat>& noise,
                                    const std::vector<Vec>& noise_shift) {
  const Eigen::Index n = drift.rows();
  const auto d = static_cast<Eigen::Index>(noise.size());
  if (drift.cols() != n || drift_shift.size() != n || noise_shift.size() != noise.size() || d == 0) {
    throw Error(ErrorKind::DimMismatch, "affine_fields: inconsistent shapes");
  }
  for (std::size_t k = 0; k < noise.size(); ++k) {
    if (noise[k].rows() != n || noise[k].cols() != n || noise_shift[k].size() != n) {
      throw Error(ErrorKind::DimMismatch, "affine_fields: noise matrix " + std::to_string(k + 1) + " is not n x n");
    }
  }
  VectorFieldSet vf;
  vf.n = n;
  vf.d = d;
  vf.f0 = [drift, drift_shift](const Vec& y) -> Vec { return drift * y + drift_shift; };
  vf.df0 = [drift](const Vec&) -> Mat { return drift; };
  vf.f = [noise, noise_shift, n, d](const Vec& y) -> Mat {
    Mat out(n, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      out.col(k) = noise[static_cast<std::size_t>(k)] * y + noise_shift[static_cast<std::size_t>(k)];
    }
    return out;
  };
  vf.df = [noise](const Vec&) { return noise; };
  vf.d2f = [n, d](const Vec&) {
    return std::vector<Bilinear>(static_cast<std::size_t>(d), Bilinear::zero(n, n));
  };
  return vf;
}

/// Lower-accuracy mode for fields without analytic derivatives: df and df0 by
/// central differences. Callers should run validate_derivatives on the result.
inline VectorFieldSet numeric_jacobian_fields(Eigen::Index n, Eigen::Index d, std::function<Vec(const Vec&)> f0,
                                              std::function<Mat(const Vec&)> f) {
  VectorFieldSet vf;
  vf.n = n;
  vf.d = d;
  vf.f0 = f0;
  vf.f = f;
  vf.df0 = [f0](const Vec& y) -> Mat { return fd_jacobian(f0, y); };
  vf.df = [f, d](const Vec& y) {
    std::vector<Mat> out;
    for (Eigen::Index k = 0; k < d; ++k) {
      out.push_back(fd_jacobian([&](const Vec& z) -> Vec { return f(z).col(k); }, y));
    }
    return out;
  };
  return vf;
}

}  // namespace roughman
