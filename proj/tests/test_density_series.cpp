#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subpot/density_series.hpp"

using namespace subpot;

namespace {

LevyModel delta1(double q = 0.0) {
  ModelSpec s;
  s.q = q;
  s.atoms = {{Point::from_rational({1, 1}), 1.0}};
  return LevyModel(s);
}

LevyModel stable_half() {
  ModelSpec s;
  s.ac = {AcKind::Stable, 1.0, 0.5, 0.0};
  return LevyModel(s);
}

}  // namespace

TEST(Series, DeltaOneInsideRadius) {
  auto m = delta1();
  double r = series_radius(m);
  // m(x) = x for delta_1 on [0, 1]
  EXPECT_NEAR(r, 0.5, 1e-12);
  SeriesEvaluator se(m, r);
  for (int i = 1; i <= 50; ++i) {
    double x = r * i / 50.0;
    auto v = se.u(x);
    EXPECT_NEAR(v.value, oracle::delta1_u(x), 1e-12);
    EXPECT_LE(v.err_bound, 1e-11);
    EXPECT_NEAR(se.du(x, Side::Left).value, oracle::delta1_du(x), 1e-11);
  }
}

TEST(Series, OutsideRadiusIsRejected) {
  EXPECT_THROW(SeriesEvaluator(delta1(), 0.9), PreconditionError);
}

TEST(Series, StableHalf) {
  auto m = stable_half();
  double r = series_radius(m);
  SeriesEvaluator se(m, r);
  for (double x : {1e-4, 1e-3, 0.5 * r, r}) EXPECT_NEAR(se.u(x).value, oracle::stable_half_u(x), 1e-11);
}

TEST(Series, KilledDrift) {
  ModelSpec s;
  s.drift = 2.0;
  s.q = 0.5;
  LevyModel m(s);
  double r = series_radius(m);
  for (double x : {0.1, 0.5 * r}) EXPECT_NEAR(u_series(m, x).value, std::exp(-0.25 * x) / 2.0, 1e-12);
}

TEST(Volterra, DeltaOneGolden) {
  auto sol = u_volterra(delta1(), 5.0, {0.01, 1e-8});
  for (int i = 0; i <= 200; ++i) {
    double x = 5.0 * i / 200.0;
    auto [v, e] = sol.eval(x);
    EXPECT_NEAR(v, oracle::delta1_u(x), 1e-7);
    EXPECT_LE(std::fabs(v - oracle::delta1_u(x)), 10.0 * e + 1e-9);
  }
}

TEST(Volterra, StableHalf) {
  auto sol = u_volterra(stable_half(), 3.0, {0.01, 1e-7});
  for (double x : {0.01, 0.3, 1.0, 2.5, 3.0}) EXPECT_NEAR(sol.eval(x).first, oracle::stable_half_u(x), 1e-6);
}

TEST(Volterra, KilledDrift) {
  ModelSpec s;
  s.q = 0.5;
  LevyModel m(s);
  auto sol = u_volterra(m, 4.0, {0.01, 1e-9});
  for (double x : {0.5, 2.0, 4.0}) EXPECT_NEAR(sol.eval(x).first, std::exp(-0.5 * x), 1e-8);
}

TEST(Volterra, RenewalLimit) {
  // u -> 1 / E X_1 = 1/2 for delta_1
  auto sol = u_volterra(delta1(), 40.0, {0.02, 1e-7});
  EXPECT_NEAR(sol.eval(40.0).first, 0.5, 1e-6);
}

TEST(Volterra, SeriesAgreementOnOverlap) {
  ModelSpec s;
  s.drift = 1.7;
  s.q = 0.2;
  s.atoms = {{Point::from_double(0.3), 0.8}, {Point::from_double(0.9), 0.4}};
  s.ac = {AcKind::Tempered, 0.6, 0.3, 1.5};
  LevyModel m(s);
  double r = series_radius(m);
  auto sol = u_volterra(m, r, {0.005, 1e-8});
  SeriesEvaluator se(m, r);
  for (int i = 1; i <= 10; ++i) {
    double x = r * i / 10.0;
    EXPECT_NEAR(sol.eval(x).first, se.u(x).value, 1e-6);
  }
}

TEST(BvSplit, ComponentsAreMonotone) {
  std::vector<LevyModel> models = {delta1(), stable_half(), delta1(0.4)};
  for (const auto& m : models) {
    std::vector<double> xs;
    for (int i = 0; i <= 40; ++i) xs.push_back(3.0 * i / 40.0);
    auto bv = bv_split(m, xs);
    for (std::size_t i = 1; i < xs.size(); ++i) {
      EXPECT_GE(bv.u1[i], bv.u1[i - 1] - 1e-12);
      EXPECT_GE(bv.u2[i], bv.u2[i - 1] - 1e-12);
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (m.q() == 0.0 && m.purely_atomic()) EXPECT_NEAR(bv.u1[i] - bv.u2[i], oracle::delta1_u(xs[i]), 1e-8);
  }
}

TEST(LaplaceCheck, MatchesReciprocalExponent) {
  for (double lam : {1.0, 3.0, 10.0}) {
    auto c = laplace_crosscheck(delta1(), lam);
    EXPECT_LT(c.abs_diff, 1e-6);
    EXPECT_NEAR(c.rhs, 1.0 / (lam + 1.0 - std::exp(-lam)), 1e-14);
  }
}
