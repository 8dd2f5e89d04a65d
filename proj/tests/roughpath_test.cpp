#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "roughman/roughpath.hpp"
#include "roughman/roughpath_io.hpp"
#include "roughman/signals.hpp"

using namespace roughman;

namespace {

RoughPath linear_path(const Vec& v, double horizon, std::size_t n, double alpha = 0.4) {
  const double dt = horizon / static_cast<double>(n);
  std::vector<Vec> values;
  std::vector<Tensor2> areas;
  for (std::size_t i = 0; i <= n; ++i) values.push_back(v * (dt * static_cast<double>(i)));
  for (std::size_t i = 0; i < n; ++i) areas.push_back(0.5 * dt * dt * outer(v, v));
  return RoughPath(dt, values, areas, alpha);
}

/// Random increments with geometric symmetric part and a random Levy part.
RoughPath random_geometric(std::uint64_t seed, Eigen::Index d, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const double dt = 1.0 / static_cast<double>(n);
  std::vector<Vec> values{Vec::Zero(d)};
  std::vector<Tensor2> areas;
  for (std::size_t i = 0; i < n; ++i) {
    Vec inc(d);
    for (Eigen::Index k = 0; k < d; ++k) inc(k) = std::sqrt(dt) * g(rng);
    Tensor2 a(d, d);
    for (Eigen::Index k = 0; k < d * d; ++k) a(k / d, k % d) = dt * g(rng);
    areas.push_back(0.5 * outer(inc, inc) + 0.5 * (a - a.transpose()));
    values.push_back(values.back() + inc);
  }
  return RoughPath(dt, values, areas, 0.45);
}

RoughPath zero_path(Eigen::Index d, std::size_t n) {
  return RoughPath(1.0 / static_cast<double>(n), std::vector<Vec>(n + 1, Vec::Zero(d)),
                   std::vector<Tensor2>(n, Tensor2::Zero(d, d)), 0.45);
}

}  // namespace

TEST(RoughPath, RejectsBadConstruction) {
  EXPECT_THROW(RoughPath(0.0, {Vec::Zero(1), Vec::Zero(1)}, {Tensor2::Zero(1, 1)}, 0.4), Error);
  EXPECT_THROW(RoughPath(0.1, {Vec::Zero(1), Vec::Zero(1)}, {}, 0.4), Error);
  EXPECT_THROW(RoughPath(0.1, {Vec::Zero(1), Vec::Zero(1)}, {Tensor2::Zero(1, 1)}, 0.3), Error);
  EXPECT_THROW(RoughPath(0.1, {Vec::Zero(1), Vec::Zero(2)}, {Tensor2::Zero(1, 1)}, 0.4), Error);
}

TEST(ChenReconstruct, BaseCaseReturnsStoredStep) {
  const RoughPath p = random_geometric(1, 2, 16);
  for (std::size_t i = 0; i < p.steps(); ++i) EXPECT_EQ(chen_reconstruct(p, i, i + 1), p.area(i));
}

TEST(ChenReconstruct, LinearPathIteratedIntegral) {
  const Vec v = Eigen::Vector2d(0.3, -1.2);
  const double horizon = 2.0;
  const RoughPath p = linear_path(v, horizon, 64);
  const Tensor2 expected = 0.5 * horizon * horizon * outer(v, v);
  EXPECT_LE((chen_reconstruct(p, 0, p.steps()) - expected).norm(), 1e-12);
}

TEST(ChenReconstruct, MidpointSplitMatchesDirect) {
  const RoughPath p = random_geometric(2, 3, 100);
  const std::size_t n = p.steps();
  const Tensor2 direct = chen_reconstruct(p, 0, n);
  const Tensor2 split = chen_combine(chen_reconstruct(p, 0, n / 2), chen_reconstruct(p, n / 2, n),
                                     p.increment(0, n / 2), p.increment(n / 2, n));
  EXPECT_LE((direct - split).norm(), 1e-12);
  EXPECT_LE(chen_associativity_defect(p), 1e-12);
}

TEST(ChenReconstruct, IndexOrder) {
  const RoughPath p = zero_path(1, 4);
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 1}, {0, 5}}) {
    try {
      chen_reconstruct(p, i, j);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::IndexOrder);
    }
  }
}

TEST(Bracket, WeaklyGeometricPathHasZeroBracket) {
  const RoughPath p = random_geometric(3, 3, 256);
  const BracketPath b = bracket(p);
  for (const Tensor2& v : b.values) EXPECT_LE(v.norm(), 1e-10);
  EXPECT_TRUE(is_weakly_geometric(p, 1e-10));
}

TEST(Bracket, PureAreaScalar) {
  const std::size_t n = 40;
  const double dt = 1.0 / static_cast<double>(n);
  const RoughPath p(dt, std::vector<Vec>(n + 1, Vec::Zero(1)), std::vector<Tensor2>(n, Tensor2::Constant(1, 1, -0.5 * dt)),
                    0.5);
  const BracketPath b = bracket(p);
  for (std::size_t i = 0; i <= n; ++i) EXPECT_NEAR(b.values[i](0, 0), p.time(i), 1e-14);
}

TEST(Bracket, SymmetricAndBlindToAntisymmetricPart) {
  const RoughPath ito = ito_wiener_lift(QSpec{{1.0, 0.5}, 0.5}, SignalConfig{1.0, 64, 16, 9});
  const BracketPath b = bracket(ito);
  EXPECT_EQ(b.values.front(), Tensor2::Zero(2, 2));
  for (const Tensor2& v : b.values) EXPECT_EQ(v, v.transpose());

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<Tensor2> perturbed = ito.areas();
  for (Tensor2& a : perturbed) {
    const double w = g(rng);
    a(0, 1) += w;
    a(1, 0) -= w;
  }
  const BracketPath c = bracket(RoughPath(ito.dt(), ito.values(), perturbed, ito.alpha()));
  for (std::size_t i = 0; i < b.values.size(); ++i) EXPECT_LE((b.values[i] - c.values[i]).norm(), 1e-12);
}

TEST(WeaklyGeometric, Cases) {
  EXPECT_TRUE(is_weakly_geometric(zero_path(2, 8), 1e-12));
  const RoughPath ito = ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 256, 16, 5});
  EXPECT_FALSE(is_weakly_geometric(ito, 1e-3));
}

TEST(HolderSeminorm, LinearZeroAndScaling) {
  const Vec v = Eigen::Vector2d(3.0, 4.0);
  EXPECT_NEAR(holder_seminorm(linear_path(v, 1.0, 50), 1), 5.0, 1e-12);
  EXPECT_EQ(holder_seminorm(zero_path(2, 16), 1), 0.0);
  EXPECT_EQ(holder_seminorm(zero_path(2, 16), 2), 0.0);

  const RoughPath p = random_geometric(6, 2, 64);
  std::vector<Vec> scaled;
  for (const Vec& x : p.values()) scaled.push_back(2.5 * x);
  const RoughPath q(p.dt(), scaled, p.areas(), p.alpha());
  EXPECT_NEAR(holder_seminorm(q, 1), 2.5 * holder_seminorm(p, 1), 1e-12);
  EXPECT_TRUE(std::isfinite(holder_seminorm(p, 2)));
}

TEST(HolderSeminorm, LevelTwoMatchesChenReconstruction) {
  const RoughPath p = random_geometric(8, 2, 24);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.steps(); ++i) {
    for (std::size_t j = i + 1; j <= p.steps(); ++j) {
      worst = std::max(worst, chen_reconstruct(p, i, j).norm() / std::pow(p.time(j) - p.time(i), 2 * p.alpha()));
    }
  }
  EXPECT_NEAR(holder_seminorm(p, 2), worst, 1e-12 * worst);
}

TEST(TrueRoughness, SmoothPathVanishes) {
  const Vec v = Eigen::Vector2d(1.0, 0.0);
  const RoughnessReport r = true_roughness_diagnostic(linear_path(v, 1.0, 1024), {v}, 0.4);
  ASSERT_EQ(r.trends.size(), 1u);
  EXPECT_EQ(r.trends[0], RoughnessTrend::Vanishing);
  // ratio = |v| h^{1 - 2 alpha}
  for (std::size_t k = 0; k < r.lags.size(); ++k) EXPECT_NEAR(r.ratios[0][k], std::pow(r.lags[k], 0.2), 1e-12);
}

TEST(TrueRoughness, BrownianGrows) {
  const RoughPath p = ito_wiener_lift(QSpec{{1.0}, 0.5}, SignalConfig{1.0, 4096, 16, 17});
  const RoughnessReport r = true_roughness_diagnostic(p, {Vec::Ones(1)}, 0.45);
  EXPECT_EQ(r.trends[0], RoughnessTrend::Growing);
  EXPECT_LT(r.log_slopes[0], 0.0);
}

TEST(TrueRoughness, ZeroPath) {
  const RoughnessReport r = true_roughness_diagnostic(zero_path(1, 64), {Vec::Ones(1)}, 0.4);
  for (double x : r.ratios[0]) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(r.trends[0], RoughnessTrend::Zero);
}

TEST(CoarsenSlice, ConsistentWithChen) {
  const RoughPath p = random_geometric(10, 2, 64);
  const RoughPath c = coarsen(p, 8);
  ASSERT_EQ(c.steps(), 8u);
  for (std::size_t i = 0; i < c.steps(); ++i) EXPECT_LE((c.area(i) - chen_reconstruct(p, 8 * i, 8 * i + 8)).norm(), 1e-15);
  const RoughPath s = slice(p, 10, 30);
  EXPECT_EQ(s.steps(), 20u);
  EXPECT_EQ(s.increment(3), p.increment(13));
  EXPECT_EQ(s.area(0), p.area(10));
}

TEST(RoughPathCsv, BitExactRoundTrip) {
  const RoughPath p = ito_wiener_lift(QSpec{{1.0, 0.25}, 0.5}, SignalConfig{0.7, 32, 16, 3});
  std::stringstream ss;
  write_rough_path(ss, p);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x_1,x_2,xx_11,xx_12,xx_21,xx_22");
  const RoughPath q = read_rough_path(ss, p.alpha());
  EXPECT_TRUE(p.same_driver(q));
  EXPECT_EQ(p.dt(), q.dt());
}

TEST(RoughPathCsv, RejectsMalformed) {
  std::stringstream bad_header("t,x_1,xx_11,extra\n0,0,0,0\n");
  EXPECT_THROW(read_rough_path(bad_header, 0.4), Error);
  std::stringstream bad_cell("t,x_1,xx_11\n0,0,0\n0.5,abc,0\n");
  EXPECT_THROW(read_rough_path(bad_cell, 0.4), Error);
}
