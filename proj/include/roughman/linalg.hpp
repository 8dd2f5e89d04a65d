#pragma once

// Dense linear algebra on desk-scale problems (n, d, m up to ~50).
// Vectors and matrices are plain Eigen dynamic types; an order-2 tensor on
// R^d (x) R^d is a d x d matrix whose (j, k) entry is the e_j (x) e_k
// coefficient.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "roughman/error.hpp"

namespace roughman {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Tensor2 = Eigen::MatrixXd;

/// Bilinear map R^p x R^p -> R^q stored as one p x p matrix per output
/// component: B(a, b)_i = a^T parts[i] b.
struct Bilinear {
  std::vector<Mat> parts;

  Vec apply(const Vec& a, const Vec& b) const {
    Vec out(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = a.dot(parts[i] * b);
    }
    return out;
  }

  Eigen::Index out_dim() const { return static_cast<Eigen::Index>(parts.size()); }

  static Bilinear zero(Eigen::Index out, Eigen::Index in) {
    return Bilinear{std::vector<Mat>(static_cast<std::size_t>(out), Mat::Zero(in, in))};
  }
};

inline Tensor2 sym(const Tensor2& t) {
  return 0.5 * (t + t.transpose());
}

inline Tensor2 outer(const Vec& a, const Vec& b) {
  return a * b.transpose();
}

/// Row-major flattening: entry (v, w) goes to index v * d + w.
inline Vec flatten(const Tensor2& t) {
  const Eigen::Index d = t.rows();
  Vec out(d * t.cols());
  for (Eigen::Index v = 0; v < d; ++v) {
    for (Eigen::Index w = 0; w < t.cols(); ++w) out(v * t.cols() + w) = t(v, w);
  }
  return out;
}

/// Contracts m, viewed as an element of L(V (x) V, W) with the flattening
/// above, against t.
inline Vec apply_bilinear(const Mat& m, const Tensor2& t) {
  if (t.rows() != t.cols() || m.cols() != t.rows() * t.cols()) {
    throw Error(ErrorKind::DimMismatch, "apply_bilinear: operator has " + std::to_string(m.cols()) +
                                            " columns, tensor has " + std::to_string(t.size()) + " entries");
  }
  return m * flatten(t);
}

inline constexpr double kRankTolerance = 1e-10;

/// Least-squares solution of a c = b for full-column-rank a. Rank is decided
/// from singular values relative to the largest one.
inline Vec pinv_apply(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorKind::DimMismatch, "pinv_apply: matrix has " + std::to_string(a.rows()) +
                                            " rows, rhs has " + std::to_string(b.size()));
  }
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTolerance * smax) ++rank;
  }
  if (smax == 0.0 || rank < a.cols()) {
    throw Error(ErrorKind::RankDeficient, "pinv_apply: numerical rank " + std::to_string(rank) + " < " +
                                              std::to_string(a.cols()) + " columns");
  }
  return svd.solve(b);
}

inline bool all_finite(const Mat& m) {
  return m.allFinite();
}

inline bool is_symmetric(const Tensor2& t, double tol = 1e-12) {
  if (t.rows() != t.cols()) return false;
  const double scale = std::max(1.0, t.norm());
  return (t - t.transpose()).norm() <= tol * scale;
}

}  // namespace roughman
