#include <cmath>

#include <gtest/gtest.h>

#include "subpot/asymptotics.hpp"

using namespace subpot;

namespace {

LevyModel delta1(double q = 0.0) {
  ModelSpec s;
  s.q = q;
  s.atoms = {{Point::from_rational({1, 1}), 1.0}};
  return LevyModel(s);
}

LevyModel stable(double C, double alpha) {
  ModelSpec s;
  s.ac = {AcKind::Stable, C, alpha, 0.0};
  return LevyModel(s);
}

}  // namespace

TEST(Asymptotics, GeometricGrid) {
  auto g = geometric_grid(0.1, 1e-3, 4);
  EXPECT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g.front(), 0.1);
  EXPECT_DOUBLE_EQ(g.back(), 1e-3);
}

TEST(Asymptotics, ZeroSeriesRemainder) {
  for (const auto& m : {delta1(), stable(1.0, 0.5), delta1(0.3)}) {
    for (int n : {0, 1, 2}) EXPECT_TRUE(check_zero_series(m, n).pass) << n;
  }
}

TEST(Asymptotics, StableLeadingTerm) {
  // (1/drift - u(x)) / (C x^{1-alpha} / (drift^2 (1-alpha))) -> 1
  auto m = stable(1.0, 0.5);
  auto c = check_zero_series(m, 0, geometric_grid(0.01, 1e-3));
  double x = c.x.back();
  double lead = std::pow(x, 0.5) / 0.5;
  EXPECT_NEAR(c.lhs.back() / lead, 1.0, 0.05);
}

TEST(Asymptotics, LinearZero) {
  auto a = check_linear_zero(delta1());
  EXPECT_TRUE(a.pass);
  EXPECT_DOUBLE_EQ(*a.slope, -1.0);
  auto b = check_linear_zero(delta1(0.5));
  EXPECT_TRUE(b.pass);
  EXPECT_DOUBLE_EQ(*b.slope, -1.5);
  auto c = check_linear_zero(stable(1.0, 0.5));
  EXPECT_TRUE(c.pass);
  EXPECT_FALSE(c.slope);
}

TEST(Asymptotics, PureDriftIsDegenerate) {
  ModelSpec s;
  LevyModel m(s);
  auto c = check_linear_zero(m);
  EXPECT_TRUE(c.degenerate);
  EXPECT_TRUE(c.pass);
}

TEST(Asymptotics, DerivativeAtZero) {
  EXPECT_TRUE(check_du_zero(delta1()).pass);
  EXPECT_TRUE(check_du_zero(stable(1.0, 0.3)).pass);
  auto c = check_du_zero(stable(1.0, 0.3), geometric_grid(0.1, 1e-3));
  EXPECT_NEAR(c.ratio.back(), 1.0, 0.1);
  for (std::size_t i = 1; i < c.ratio.size(); ++i) EXPECT_GT(c.ratio[i], c.ratio[i - 1]);
}

TEST(Asymptotics, DerivativeAtInfinity) {
  auto c = check_du_infinity(delta1());
  EXPECT_TRUE(c.pass);
  EXPECT_THROW(check_du_infinity(stable(1.0, 0.5)), PreconditionError);
  EXPECT_THROW(check_du_infinity(delta1(0.2)), PreconditionError);
}

TEST(Asymptotics, Limits) {
  EXPECT_TRUE(check_limit_zero(delta1()).pass);
  EXPECT_TRUE(check_limit_zero(stable(0.05, 0.1)).pass);
  auto inf = check_limit_infinity(delta1());
  EXPECT_TRUE(inf.pass);
  EXPECT_NEAR(inf.ratio[0], 1.0, 1e-6);
  EXPECT_THROW(check_limit_infinity(stable(1.0, 0.5)), PreconditionError);
}
