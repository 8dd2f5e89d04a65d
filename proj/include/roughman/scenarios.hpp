#pragma once

// Built-in field/chart pairs. They carry analytic derivatives, so they are
// code rather than configuration.
//
//   circle_rot            f(y) = R y on S^1 in R^2, f0 = 0
//   circle_rot_corrected  same f, f0 = 1/2 lambda R^2 y = -1/2 lambda y
//   sphere_so3            f_k(y) = A_k y (so(3) generators) on S^2, f0 = 0
//   sphere_so3_corrected  same f, f0 = 1/2 sum_k lambda_k A_k^2 y
//   affine_linear         affine fields tangent to a tilted plane in R^3
//   scalar_geom_bm        f(y) = y on the half-line (0, inf), f0 = 0
//
// The "corrected" drifts are exactly the ones that make the Ito-corrected
// drift f0 - 1/2 sum_k lambda_k Df_k f_k vanish.

#include <cmath>
#include <string>
#include <vector>

#include "roughman/chart.hpp"
#include "roughman/error.hpp"
#include "roughman/fields.hpp"
#include "roughman/linalg.hpp"

namespace roughman {

/// Graph of the upper half circle over the tangent line at (1, 0):
/// phi(z) = (sqrt(1 - z^2), z), ell(y) = y_2.
inline Chart circle_chart(double half_width = 0.8) {
  Chart c;
  c.name = "circle";
  c.m = 1;
  c.n = 2;
  c.phi = [](const Vec& z) -> Vec { return Eigen::Vector2d(std::sqrt(1.0 - z(0) * z(0)), z(0)); };
  c.dphi = [](const Vec& z) -> Mat {
    const double s = std::sqrt(1.0 - z(0) * z(0));
    Mat j(2, 1);
    j << -z(0) / s, 1.0;
    return j;
  };
  c.d2phi = [](const Vec& z) {
    const double s = std::sqrt(1.0 - z(0) * z(0));
    Bilinear b = Bilinear::zero(2, 1);
    b.parts[0](0, 0) = -1.0 / (s * s * s);
    return b;
  };
  c.ell = Mat(1, 2);
  c.ell << 0.0, 1.0;
  c.lower = Vec::Constant(1, -half_width);
  c.upper = Vec::Constant(1, half_width);
  c.probes = tensor_probe_grid(c.lower, c.upper);
  c.implicit_defect = [](const Vec& y) { return std::abs(y.norm() - 1.0); };
  return c;
}

/// Angle parametrization phi(t) = (cos t, sin t) with ell(y) = y_2, which is a
/// valid left inverse only to first order at t = 0; its only probe is t = 0.
inline Chart circle_angle_chart() {
  Chart c;
  c.name = "circle_angle";
  c.m = 1;
  c.n = 2;
  c.phi = [](const Vec& t) -> Vec { return Eigen::Vector2d(std::cos(t(0)), std::sin(t(0))); };
  c.dphi = [](const Vec& t) -> Mat {
    Mat j(2, 1);
    j << -std::sin(t(0)), std::cos(t(0));
    return j;
  };
  c.d2phi = [](const Vec& t) {
    Bilinear b = Bilinear::zero(2, 1);
    b.parts[0](0, 0) = -std::cos(t(0));
    b.parts[1](0, 0) = -std::sin(t(0));
    return b;
  };
  c.ell = Mat(1, 2);
  c.ell << 0.0, 1.0;
  c.lower = Vec::Constant(1, -0.5);
  c.upper = Vec::Constant(1, 0.5);
  c.probes = {Vec::Zero(1)};
  c.implicit_defect = [](const Vec& y) { return std::abs(y.norm() - 1.0); };
  return c;
}

/// Graph of the upper hemisphere over the tangent plane at (0, 0, 1).
inline Chart sphere_chart(double half_width = 0.6) {
  Chart c;
  c.name = "sphere";
  c.m = 2;
  c.n = 3;
  c.phi = [](const Vec& z) -> Vec { return Eigen::Vector3d(z(0), z(1), std::sqrt(1.0 - z.squaredNorm())); };
  c.dphi = [](const Vec& z) -> Mat {
    const double s = std::sqrt(1.0 - z.squaredNorm());
    Mat j(3, 2);
    j << 1.0, 0.0, 0.0, 1.0, -z(0) / s, -z(1) / s;
    return j;
  };
  c.d2phi = [](const Vec& z) {
    const double s = std::sqrt(1.0 - z.squaredNorm());
    Bilinear b = Bilinear::zero(3, 2);
    b.parts[2] = -Mat::Identity(2, 2) / s - (z * z.transpose()) / (s * s * s);
    return b;
  };
  c.ell = Mat::Zero(2, 3);
  c.ell(0, 0) = 1.0;
  c.ell(1, 1) = 1.0;
  c.lower = Vec::Constant(2, -half_width);
  c.upper = Vec::Constant(2, half_width);
  c.probes = tensor_probe_grid(c.lower, c.upper);
  c.implicit_defect = [](const Vec& y) { return std::abs(y.norm() - 1.0); };
  return c;
}

namespace detail {

/// Orthonormal basis of the tilted plane and its offset (orthogonal to it).
inline Mat affine_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  Mat b(3, 2);
  b << 1.0, 0.0, 0.0, r, 0.0, r;
  return b;
}

inline Vec affine_offset() { return Eigen::Vector3d(0.0, 0.5, -0.5); }

}  // namespace detail

/// The plane p0 + span(B) in R^3; ell = B^T since B is orthonormal and p0 is
/// orthogonal to it.
inline Chart affine_chart() {
  const Mat basis = detail::affine_basis();
  const Vec offset = detail::affine_offset();
  Chart c;
  c.name = "affine_plane";
  c.m = 2;
  c.n = 3;
  c.phi = [basis, offset](const Vec& z) -> Vec { return offset + basis * z; };
  c.dphi = [basis](const Vec&) -> Mat { return basis; };
  c.d2phi = [](const Vec&) { return Bilinear::zero(3, 2); };
  c.ell = basis.transpose();
  c.lower = Vec::Constant(2, -5.0);
  c.upper = Vec::Constant(2, 5.0);
  c.probes = tensor_probe_grid(c.lower, c.upper);
  c.implicit_defect = [basis, offset](const Vec& y) {
    const Vec r = y - offset;
    return (r - basis * (basis.transpose() * r)).norm();
  };
  return c;
}

inline Chart halfline_chart() {
  Chart c;
  c.name = "halfline";
  c.m = 1;
  c.n = 1;
  c.phi = [](const Vec& z) -> Vec { return z; };
  c.dphi = [](const Vec&) -> Mat { return Mat::Identity(1, 1); };
  c.d2phi = [](const Vec&) { return Bilinear::zero(1, 1); };
  c.ell = Mat::Identity(1, 1);
  c.lower = Vec::Constant(1, 1e-3);
  c.upper = Vec::Constant(1, 1e3);
  c.probes = tensor_probe_grid(c.lower, c.upper);
  c.implicit_defect = [](const Vec& y) { return y(0) > 0.0 ? 0.0 : -y(0); };
  return c;
}

inline Mat rotation_generator_2d() {
  Mat r(2, 2);
  r << 0.0, -1.0, 1.0, 0.0;
  return r;
}

/// A_1 = E23 - E32, A_2 = E31 - E13, A_3 = E12 - E21.
inline std::vector<Mat> so3_generators() {
  std::vector<Mat> a(3, Mat::Zero(3, 3));
  a[0](1, 2) = 1.0;
  a[0](2, 1) = -1.0;
  a[1](2, 0) = 1.0;
  a[1](0, 2) = -1.0;
  a[2](0, 1) = 1.0;
  a[2](1, 0) = -1.0;
  return a;
}

struct BuiltinScenario {
  std::string field_id;
  VectorFieldSet fields;
  Chart chart;
  Vec base_point;  // z0; the initial condition is phi(z0)
};

inline const std::vector<std::string>& builtin_field_ids() {
  static const std::vector<std::string> ids = {"circle_rot",     "circle_rot_corrected", "sphere_so3",
                                               "sphere_so3_corrected", "affine_linear", "scalar_geom_bm"};
  return ids;
}

inline Eigen::Index builtin_noise_dim(const std::string& id) {
  if (id == "circle_rot" || id == "circle_rot_corrected" || id == "scalar_geom_bm") return 1;
  if (id == "sphere_so3" || id == "sphere_so3_corrected") return 3;
  if (id == "affine_linear") return 2;
  throw Error(ErrorKind::Config, "unknown built-in field '" + id + "'");
}

inline std::string builtin_chart_id(const std::string& field_id) {
  if (field_id.rfind("circle", 0) == 0) return "circle";
  if (field_id.rfind("sphere", 0) == 0) return "sphere";
  if (field_id == "affine_linear") return "affine_plane";
  if (field_id == "scalar_geom_bm") return "halfline";
  throw Error(ErrorKind::Config, "unknown built-in field '" + field_id + "'");
}

inline Chart builtin_chart(const std::string& chart_id) {
  if (chart_id == "circle") return circle_chart();
  if (chart_id == "circle_angle") return circle_angle_chart();
  if (chart_id == "sphere") return sphere_chart();
  if (chart_id == "affine_plane") return affine_chart();
  if (chart_id == "halfline") return halfline_chart();
  throw Error(ErrorKind::Config, "unknown built-in chart '" + chart_id + "'");
}

/// Built-in fields for noise eigenvalues `lambdas` (used only by the
/// corrected drifts).
inline VectorFieldSet builtin_fields(const std::string& id, const std::vector<double>& lambdas) {
  const Eigen::Index d = builtin_noise_dim(id);
  if (static_cast<Eigen::Index>(lambdas.size()) != d) {
    throw Error(ErrorKind::Config, id + " needs " + std::to_string(d) + " noise eigenvalues, got " +
                                       std::to_string(lambdas.size()));
  }
  if (id == "circle_rot" || id == "circle_rot_corrected") {
    const Mat r = rotation_generator_2d();
    const Mat drift = id == "circle_rot" ? Mat::Zero(2, 2) : Mat(0.5 * lambdas[0] * r * r);
    return affine_fields(drift, Vec::Zero(2), {r}, {Vec::Zero(2)});
  }
  if (id == "sphere_so3" || id == "sphere_so3_corrected") {
    const std::vector<Mat> a = so3_generators();
    Mat drift = Mat::Zero(3, 3);
    if (id == "sphere_so3_corrected") {
      for (std::size_t k = 0; k < 3; ++k) drift += 0.5 * lambdas[k] * a[k] * a[k];
    }
    return affine_fields(drift, Vec::Zero(3), a, std::vector<Vec>(3, Vec::Zero(3)));
  }
  if (id == "affine_linear") {
    const Mat b = detail::affine_basis();
    const Mat ell = b.transpose();
    Mat c1(2, 2), c2(2, 2);
    c1 << 0.0, -0.5, 0.5, 0.0;
    c2 = 0.3 * Mat::Identity(2, 2);
    const Mat c0 = -0.5 * Mat::Identity(2, 2);
    return affine_fields(b * c0 * ell, b * Eigen::Vector2d(0.1, -0.1), {b * c1 * ell, b * c2 * ell},
                         {b * Eigen::Vector2d(0.2, 0.0), b * Eigen::Vector2d(0.0, 0.1)});
  }
  if (id == "scalar_geom_bm") {
    return affine_fields(Mat::Zero(1, 1), Vec::Zero(1), {Mat::Identity(1, 1)}, {Vec::Zero(1)});
  }
  throw Error(ErrorKind::Config, "unknown built-in field '" + id + "'");
}

inline BuiltinScenario make_builtin(const std::string& field_id, const std::vector<double>& lambdas) {
  BuiltinScenario s;
  s.field_id = field_id;
  s.fields = builtin_fields(field_id, lambdas);
  s.chart = builtin_chart(builtin_chart_id(field_id));
  s.base_point = field_id == "scalar_geom_bm" ? Vec::Constant(1, 1.0) : Vec::Zero(s.chart.m);
  return s;
}

}  // namespace roughman
