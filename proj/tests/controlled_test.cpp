#include <gtest/gtest.h>

#include "roughman/controlled.hpp"
#include "roughman/scenarios.hpp"
#include "roughman/signals.hpp"
#include "roughman/solver.hpp"

using namespace roughman;

namespace {

std::shared_ptr<const RoughPath> share(RoughPath p) { return std::make_shared<const RoughPath>(std::move(p)); }

/// Y = X with Y' = identity, as an L(V, W) integrand for d = w = 1.
OperatorPath self_integrand(const std::shared_ptr<const RoughPath>& p) {
  OperatorPath y{p, {}, {}};
  for (const Vec& x : p->values()) {
    y.values.push_back(Mat::Constant(1, 1, x(0)));
    y.gubinelli.push_back(Mat::Ones(1, 1));
  }
  return y;
}

SmoothMap squared_norm() {
  return SmoothMap{[](const Vec& y) -> Vec { return Vec::Constant(1, y.squaredNorm()); },
                   [](const Vec& y) -> Mat { return 2.0 * y.transpose(); },
                   [](const Vec& y) {
                     Bilinear b = Bilinear::zero(1, y.size());
                     b.parts[0] = 2.0 * Mat::Identity(y.size(), y.size());
                     return b;
                   }};
}

ItoInputs inputs_from(const VectorFieldSet& vf, const RDESolution& sol) {
  return ItoInputs{sol.controlled, second_order_path(vf, sol), drift_path(vf, sol)};
}

}  // namespace

TEST(RoughIntegral, ConstantIntegrandTelescopes) {
  const auto p = share(ito_wiener_lift(QSpec{{1.0, 2.0}, 0.5}, SignalConfig{1.0, 32, 16, 1}));
  Mat c(3, 2);
  c << 1, 2, 3, 4, 5, 6;
  OperatorPath y{p, std::vector<Mat>(33, c), std::vector<Mat>(33, Mat::Zero(3, 4))};
  const ControlledPath i = rough_integral(y, *p);
  for (std::size_t k = 0; k <= p->steps(); ++k) EXPECT_LE((i.values[k] - c * p->increment(0, k)).norm(), 1e-12);
}

TEST(RoughIntegral, SmoothSelfIntegral) {
  const auto p = share(smooth_lift([](double t) -> Vec { return Vec::Constant(1, t); }, SignalConfig{2.0, 64, 16, 0}));
  const ControlledPath i = rough_integral(self_integrand(p), *p);
  EXPECT_NEAR(i.values.back()(0), 2.0, 1e-12);
}

TEST(RoughIntegral, ItoSelfIntegral) {
  const auto p = share(ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 256, 16, 4}));
  const ControlledPath i = rough_integral(self_integrand(p), *p);
  const double xt = p->values().back()(0);
  const double expected = 0.5 * xt * xt - 0.5 * bracket(*p).values.back()(0, 0);
  EXPECT_NEAR(i.values.back()(0), expected, 1e-10);
  EXPECT_NEAR(i.values.back()(0), 0.5 * (xt * xt - 1.0), 1e-10);
}

TEST(RoughIntegral, LinearInIntegrandAndControlled) {
  const auto p = share(geometric_fbm_lift(QSpec{{1.0, 0.5}, 0.4}, SignalConfig{1.0, 64, 16, 2}));
  OperatorPath a{p, {}, {}}, b{p, {}, {}}, ab{p, {}, {}};
  for (std::size_t k = 0; k <= p->steps(); ++k) {
    const Vec& x = p->value(k);
    Mat va(2, 2), vb(2, 2);
    va << std::sin(x(0)), x(1), 1.0, x(0) * x(1);
    vb << 1.0, -x(0), x(1) * x(1), 2.0;
    Mat ga = Mat::Zero(2, 4), gb = Mat::Zero(2, 4);
    ga(0, 0) = std::cos(x(0));
    ga(0, 3) = 1.0;
    gb(0, 1) = -1.0;
    gb(1, 1) = 2.0 * x(1);
    a.values.push_back(va);
    a.gubinelli.push_back(ga);
    b.values.push_back(vb);
    b.gubinelli.push_back(gb);
    ab.values.push_back(2.0 * va - 0.5 * vb);
    ab.gubinelli.push_back(2.0 * ga - 0.5 * gb);
  }
  const ControlledPath ia = rough_integral(a, *p);
  const ControlledPath ib = rough_integral(b, *p);
  const ControlledPath iab = rough_integral(ab, *p);
  for (std::size_t k = 0; k <= p->steps(); ++k) {
    EXPECT_LE((iab.values[k] - (2.0 * ia.values[k] - 0.5 * ib.values[k])).norm(), 1e-12);
  }
  EXPECT_TRUE(std::isfinite(remainder_seminorm(ia)));
}

TEST(RoughIntegral, AdditiveInTime) {
  const auto p = share(ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 64, 16, 6}));
  const ControlledPath whole = rough_integral(self_integrand(p), *p);
  const auto first = share(slice(*p, 0, 20));
  const auto second = share(slice(*p, 20, 64));
  const double split = rough_integral(self_integrand(first), *first).values.back()(0) +
                       rough_integral(self_integrand(second), *second).values.back()(0);
  EXPECT_NEAR(whole.values.back()(0), split, 1e-12);
}

TEST(RoughIntegral, BaseMismatchAndShapes) {
  const auto p = share(ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 16, 16, 1}));
  const auto q = share(ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 16, 16, 2}));
  try {
    rough_integral(self_integrand(p), *q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BaseMismatch);
  }
  OperatorPath bad = self_integrand(p);
  bad.gubinelli[3] = Mat::Ones(1, 2);
  try {
    rough_integral(bad, *p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(ItoFormula, LinearFunctionIsExact) {
  const auto p = share(ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 128, 16, 3}));
  const BuiltinScenario s = make_builtin("circle_rot_corrected", {1.0});
  const RDESolution sol = solve(s.fields, p, s.chart.phi(s.base_point));
  Mat a(2, 2);
  a << 1.0, -2.0, 0.5, 3.0;
  const SmoothMap lin{[a](const Vec& y) -> Vec { return a * y; }, [a](const Vec&) -> Mat { return a; },
                      [](const Vec&) { return Bilinear::zero(2, 2); }};
  EXPECT_LE(ito_formula_residual(lin, inputs_from(s.fields, sol)).residual, 1e-10);
}

TEST(ItoFormula, GeometricCircleResidualShrinks) {
  const BuiltinScenario s = make_builtin("circle_rot", {1.0});
  const auto fine = share(geometric_fbm_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 1024, 16, 8}));
  std::vector<double> residual;
  for (std::size_t factor : {8u, 4u, 2u, 1u}) {
    const auto p = factor == 1 ? fine : share(coarsen(*fine, factor));
    const RDESolution sol = solve(s.fields, p, s.chart.phi(s.base_point));
    const ItoResidual r = ito_formula_residual(squared_norm(), inputs_from(s.fields, sol));
    EXPECT_LE(r.bracket_term, 1e-10);
    residual.push_back(r.residual);
  }
  EXPECT_LT(residual.back(), residual.front() / 4.0);
}

TEST(ItoFormula, ItoCircleNeedsBracketTerm) {
  const BuiltinScenario s = make_builtin("circle_rot_corrected", {1.0});
  const auto p = share(ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 1024, 16, 8}));
  const RDESolution sol = solve(s.fields, p, s.chart.phi(s.base_point));
  const ItoResidual with = ito_formula_residual(squared_norm(), inputs_from(s.fields, sol), true);
  const ItoResidual without = ito_formula_residual(squared_norm(), inputs_from(s.fields, sol), false);
  // 1/2 int D^2F(Y)(RY, RY) d[X] = int |Y|^2 dt ~ 1 on the unit circle.
  EXPECT_NEAR(with.bracket_term, 1.0, 0.05);
  EXPECT_LT(with.residual, 0.01);
  EXPECT_GT(without.residual, 0.9);
}
