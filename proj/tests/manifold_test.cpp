#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "roughman/manifold.hpp"
#include "roughman/scenarios.hpp"
#include "roughman/signals.hpp"

using namespace roughman;

namespace {

void expect_error(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

Tensor2 scalar(double v) { return Tensor2::Constant(1, 1, v); }

Tensor2 diag(const std::vector<double>& l) {
  Tensor2 x = Tensor2::Zero(static_cast<Eigen::Index>(l.size()), static_cast<Eigen::Index>(l.size()));
  for (std::size_t k = 0; k < l.size(); ++k) x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = l[k];
  return x;
}

}  // namespace

TEST(Tangency, CircleAtBasePoint) {
  const Chart c = circle_chart();
  const Vec z = Vec::Zero(1);
  EXPECT_NEAR(tangency_residual(c, z, Eigen::Vector2d(1.0, 0.0)), 1.0, 1e-14);
  EXPECT_NEAR(tangency_residual(c, z, Eigen::Vector2d(0.0, 3.0)), 0.0, 1e-14);
  EXPECT_NEAR(tangency_residual(c, z, Eigen::Vector2d(-2.0, 5.0)), 2.0, 1e-14);
}

TEST(Tangency, SphereNormalComponent) {
  // At y = phi(z) the normal is y itself, so the residual is |<v, y>|.
  const Chart c = sphere_chart();
  const Vec z = Eigen::Vector2d(0.3, -0.2);
  const Vec y = c.phi(z);
  const Vec v = Eigen::Vector3d(0.7, 1.1, -0.4);
  EXPECT_NEAR(tangency_residual(c, z, v), std::abs(v.dot(y)), 1e-12);
}

TEST(Tangency, Errors) {
  const Chart c = circle_chart();
  expect_error(ErrorKind::OutOfDomain, [&] { tangency_residual(c, Vec::Constant(1, 0.9), Eigen::Vector2d(0, 1)); });
  expect_error(ErrorKind::DimMismatch, [&] { tangency_residual(c, Vec::Zero(1), Eigen::Vector3d(0, 1, 0)); });
  Chart broken = c;
  broken.ell = Mat(1, 2);
  broken.ell << 0.0, 2.0;
  expect_error(ErrorKind::Mismatch, [&] { tangency_residual(broken, Vec::Zero(1), Eigen::Vector2d(0, 1)); });
}

TEST(CorrectedDrift, ZeroBracketGivesDrift) {
  const VectorFieldSet vf = builtin_fields("affine_linear", {1.0, 1.0});
  const Vec y = Eigen::Vector3d(0.4, -0.3, 1.2);
  EXPECT_EQ(corrected_drift(vf, y, Tensor2::Zero(2, 2)), vf.f0(y));
}

TEST(CorrectedDrift, RotationsGainRadialTerm) {
  // Df f = R^2 y = -y on the circle and sum_k A_k^2 y = -2 y on the sphere.
  const VectorFieldSet circle = builtin_fields("circle_rot", {1.0});
  const Vec y2 = Eigen::Vector2d(0.6, 0.8);
  EXPECT_LE((corrected_drift(circle, y2, scalar(1.0)) - 0.5 * y2).norm(), 1e-15);
  const VectorFieldSet sphere = builtin_fields("sphere_so3", {1.0, 1.0, 1.0});
  const Vec y3 = Eigen::Vector3d(0.48, 0.6, 0.64);
  EXPECT_LE((corrected_drift(sphere, y3, diag({1.0, 1.0, 1.0}), std::vector<double>{1.0, 1.0, 1.0}) - y3).norm(),
            1e-15);
}

TEST(CorrectedDrift, CorrectedBuiltinsVanishOnTheManifold) {
  const std::vector<double> l{1.0, 0.5, 0.25};
  const VectorFieldSet sphere = builtin_fields("sphere_so3_corrected", l);
  const Chart c = sphere_chart();
  for (const Vec& z : c.probes) EXPECT_LE(corrected_drift(sphere, c.phi(z), diag(l), l).norm(), 1e-14);
}

TEST(CorrectedDrift, OffDiagonalBracket) {
  // x = [[a, b], [b, c]] contributes -1/2 sum_{jk} x_jk Df_k f_j.
  const VectorFieldSet vf = builtin_fields("affine_linear", {1.0, 1.0});
  Tensor2 x(2, 2);
  x << 0.9, 0.3, 0.3, 0.4;
  const Vec y = Eigen::Vector3d(0.2, 0.5, -0.1);
  const Mat f = vf.f(y);
  const std::vector<Mat> df = vf.df(y);
  Vec expected = vf.f0(y);
  for (Eigen::Index j = 0; j < 2; ++j) {
    for (Eigen::Index k = 0; k < 2; ++k) expected -= 0.5 * x(j, k) * df[static_cast<std::size_t>(k)] * f.col(j);
  }
  EXPECT_LE((corrected_drift(vf, y, x) - expected).norm(), 1e-14);
}

TEST(CorrectedDrift, Errors) {
  const VectorFieldSet vf = builtin_fields("affine_linear", {1.0, 1.0});
  const Vec y = Vec::Zero(3);
  Tensor2 skew(2, 2);
  skew << 1.0, 0.1, 0.2, 1.0;
  expect_error(ErrorKind::NotSymmetric, [&] { corrected_drift(vf, y, skew); });
  expect_error(ErrorKind::DimMismatch, [&] { corrected_drift(vf, y, scalar(1.0)); });
  expect_error(ErrorKind::LambdaMismatch, [&] { corrected_drift(vf, y, diag({1.0, 1.0}), std::vector<double>{1.0}); });
  expect_error(ErrorKind::LambdaMismatch,
               [&] { corrected_drift(vf, y, diag({1.0, 1.0}), std::vector<double>{1.0, 0.5}); });
}

TEST(Invariance, CircleCases) {
  const Chart c = circle_chart();
  const VectorFieldSet plain = builtin_fields("circle_rot", {1.0});
  const VectorFieldSet corrected = builtin_fields("circle_rot_corrected", {1.0});

  const Verdict geometric = check_invariance(plain, c, scalar(0.0), 1e-8);
  EXPECT_TRUE(geometric.invariant);
  EXPECT_FALSE(geometric.corrected);
  EXPECT_LE(geometric.max_residual, 1e-14);

  const Verdict ito = check_invariance(plain, c, scalar(1.0), 1e-8);
  EXPECT_FALSE(ito.invariant);
  EXPECT_TRUE(ito.corrected);
  EXPECT_LE(ito.max_vol_residual, 1e-14);
  ASSERT_EQ(ito.drift_residuals.size(), c.probes.size());
  for (const VerdictEntry& e : ito.drift_residuals) EXPECT_NEAR(e.residual, 0.5, 1e-10);

  const Verdict fixed = check_invariance(corrected, c, scalar(1.0), 1e-8);
  EXPECT_TRUE(fixed.invariant);
  EXPECT_LE(fixed.max_residual, 1e-14);
}

TEST(Invariance, ScalesWithBracket) {
  const Chart c = circle_chart();
  const VectorFieldSet plain = builtin_fields("circle_rot", {1.0});
  for (double lambda : {0.25, 2.0}) {
    EXPECT_NEAR(check_invariance(plain, c, scalar(lambda), 1e-8).max_drift_residual, 0.5 * lambda, 1e-12);
  }
}

TEST(Invariance, MonotoneInTolerance) {
  const Chart c = sphere_chart();
  const VectorFieldSet vf = builtin_fields("sphere_so3", {1.0, 1.0, 1.0});
  const Tensor2 x = diag({1.0, 1.0, 1.0});
  bool seen_invariant = false;
  for (double tol : {1e-12, 1e-3, 0.5, 0.999, 1.0 + 1e-9, 2.0, 10.0}) {
    const bool inv = check_invariance(vf, c, x, tol).invariant;
    if (seen_invariant) {
      EXPECT_TRUE(inv) << tol;
    }
    seen_invariant = seen_invariant || inv;
  }
  EXPECT_TRUE(seen_invariant);
  EXPECT_FALSE(check_invariance(vf, c, x, 0.999).invariant);
  expect_error(ErrorKind::Precondition, [&] { check_invariance(vf, c, x, 0.0); });
}

TEST(Invariance, AllCorrectedBuiltinsPass) {
  for (const auto& [id, l] : std::vector<std::pair<std::string, std::vector<double>>>{
           {"circle_rot_corrected", {0.8}},
           {"sphere_so3_corrected", {1.0, 0.5, 0.25}},
           {"affine_linear", {1.0, 1.0}},
           {"scalar_geom_bm", {1.0}}}) {
    const BuiltinScenario s = make_builtin(id, l);
    EXPECT_TRUE(check_invariance(s.fields, s.chart, diag(l), 1e-8).invariant) << id;
  }
}

TEST(Verdict, WriterFormat) {
  const Chart c = circle_angle_chart();
  const VectorFieldSet vf = builtin_fields("circle_rot", {1.0});
  std::ostringstream out;
  write_verdict(out, check_invariance(vf, c, scalar(1.0), 1e-8));
  const std::string s = out.str();
  EXPECT_NE(s.find("probe=0 z=0 condition=vol_1 residual=0\n"), std::string::npos) << s;
  EXPECT_NE(s.find("probe=0 z=0 condition=drift residual=0.5\n"), std::string::npos) << s;
  EXPECT_NE(s.find("VERDICT invariant=false max_residual=0.5 tol=1e-08\n"), std::string::npos) << s;
  EXPECT_LT(s.find("vol_1"), s.find("drift"));
}

TEST(DistanceMonitor, ZeroOnTheManifold) {
  const Chart c = sphere_chart();
  std::vector<Vec> traj;
  for (const Vec& z : c.probes) traj.push_back(c.phi(z));
  const DistanceReport r = distance_monitor(traj, c);
  EXPECT_FALSE(r.chart_exit);
  ASSERT_TRUE(r.exact);
  EXPECT_LE(r.max_defect(), 1e-15);
  for (double d : r.proxy) EXPECT_LE(d, 1e-15);
}

TEST(DistanceMonitor, RadialOffsets) {
  const Chart c = circle_chart();
  std::vector<Vec> traj{Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.5, 0.0), Eigen::Vector2d(0.0, 0.9)};
  const DistanceReport r = distance_monitor(traj, c);
  EXPECT_NEAR(r.defect_at(1), 0.5, 1e-15);
  EXPECT_NEAR(r.defect_at(2), 0.1, 1e-15);
  EXPECT_NEAR(r.max_defect(), 0.5, 1e-15);
  ASSERT_TRUE(r.chart_exit);
  EXPECT_EQ(*r.chart_exit, 2u);
}

TEST(DistanceMonitor, ProxyStopsAtChartExit) {
  Chart c = circle_chart();
  c.implicit_defect = nullptr;
  std::vector<Vec> traj{Eigen::Vector2d(1.2, 0.0), Eigen::Vector2d(0.0, 0.95), Eigen::Vector2d(5.0, 0.0)};
  const DistanceReport r = distance_monitor(traj, c);
  EXPECT_FALSE(r.exact);
  ASSERT_TRUE(r.chart_exit);
  EXPECT_EQ(*r.chart_exit, 1u);
  EXPECT_NEAR(r.max_defect(), 0.2, 1e-15);
}

TEST(Charts, BuiltinsValidate) {
  for (const std::string id : {"circle", "circle_angle", "sphere", "affine_plane", "halfline"}) {
    const Chart c = builtin_chart(id);
    EXPECT_NO_THROW(validate_chart(c)) << id;
    const ChartCheck chk = inspect_chart(c);
    EXPECT_LE(chk.left_inverse, 1e-12) << id;
    EXPECT_LE(chk.tangent_rebuild, 1e-12) << id;
  }
}

TEST(Charts, AngleChartIsOnlyFirstOrderLeftInverse) {
  Chart c = circle_angle_chart();
  c.probes = {Vec::Constant(1, 0.3)};
  EXPECT_NEAR(inspect_chart(c).left_inverse, 0.3 - std::sin(0.3), 1e-15);
  expect_error(ErrorKind::Precondition, [&] { validate_chart(c); });
}

TEST(Charts, DetectsDegenerateImmersion) {
  Chart c = circle_chart();
  c.dphi = [](const Vec&) -> Mat { return Mat::Zero(2, 1); };
  expect_error(ErrorKind::RankDeficient, [&] { validate_chart(c); });
}
