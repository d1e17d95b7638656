#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "subpot/smoothness.hpp"

using namespace subpot;

namespace {

LevyModel delta1() {
  ModelSpec s;
  s.atoms = {{Point::from_rational({1, 1}), 1.0}};
  return LevyModel(s);
}

LevyModel mixed() {
  ModelSpec s;
  s.atoms = {{Point::from_rational({1, 1}), 1.0}};
  s.ac = {AcKind::Stable, 0.2, 0.4, 0.0};
  return LevyModel(s);
}

Point R(std::int64_t p, std::int64_t q = 1) { return Point::from_rational(*make_rational(p, q)); }

}  // namespace

TEST(OneSidedFd, RecoversPolynomialDerivatives) {
  // x^3 on the right, 2x^3 + x on the left of x0 = 1
  auto f = [](double y) { return std::make_pair(y >= 1.0 ? y * y * y : 2 * y * y * y - 1.0 * (y - 1.0) - 1.0, 0.0); };
  auto r = one_sided_fd(f, 1.0, 1, Side::Right, 0.2);
  auto l = one_sided_fd(f, 1.0, 1, Side::Left, 0.2);
  EXPECT_NEAR(r.estimate, 3.0, 1e-9);
  EXPECT_NEAR(l.estimate, 5.0, 1e-9);
  EXPECT_NEAR(one_sided_fd(f, 1.0, 2, Side::Right, 0.2).estimate, 6.0, 1e-7);
}

TEST(JumpCoefficient, Recursion) {
  auto m = delta1();
  EXPECT_DOUBLE_EQ(jump_coefficient(m, 1, R(1)), 1.0);
  EXPECT_DOUBLE_EQ(jump_coefficient(m, 2, R(2)), 1.0);
  EXPECT_DOUBLE_EQ(jump_coefficient(m, 3, R(3)), 1.0);
  ModelSpec s;
  s.atoms = {{R(1, 2), 0.7}, {R(7, 10), 0.8}};
  LevyModel two(s);
  // 1.2 = 0.5 + 0.7 in two orders
  EXPECT_NEAR(jump_coefficient(two, 2, R(6, 5)), 2 * 0.7 * 0.8, 1e-15);
  EXPECT_NEAR(jump_coefficient(two, 2, R(1)), 0.7 * 0.7, 1e-15);
}

TEST(Classify, DeltaOneVerdicts) {
  auto m = delta1();
  for (int x = 1; x <= 3; ++x) {
    auto rep = classify_point(m, R(x));
    ASSERT_TRUE(rep.min_k);
    EXPECT_EQ(*rep.min_k, x);
    for (const auto& v : rep.verdicts) EXPECT_EQ(v.differentiable, v.k < x);
    for (const auto& j : rep.jumps) {
      if (j.order < x) EXPECT_FALSE(j.present) << "x=" << x << " order " << j.order;
      if (j.order == x) {
        EXPECT_TRUE(j.present);
        EXPECT_NEAR(j.measured, j.predicted, std::max(1e-4, 3 * j.stderr_));
      }
    }
  }
  auto smooth = classify_point(m, R(37, 100));
  EXPECT_TRUE(smooth.infinitely_differentiable());
  for (const auto& j : smooth.jumps) EXPECT_FALSE(j.present);
}

TEST(Classify, MixedModelSameVerdicts) {
  auto m = mixed();
  for (int x = 1; x <= 3; ++x) {
    SmoothnessOptions o;
    o.k_max = 3;
    auto rep = classify_point(m, R(x), o);
    ASSERT_TRUE(rep.min_k);
    EXPECT_EQ(*rep.min_k, x);
    const auto& j = rep.jumps[x - 1];
    EXPECT_TRUE(j.present);
    EXPECT_NEAR(j.measured, j.predicted, std::max(1e-4, 3 * j.stderr_));
    for (int o2 = 0; o2 < x - 1; ++o2) EXPECT_FALSE(rep.jumps[o2].present);
  }
}

TEST(DerivativeJump, RandomAtomicModels) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    ModelSpec s;
    s.drift = 0.5 + 3.5 * U(rng);
    std::int64_t loc = 0;
    for (int i = 0; i < 1 + trial; ++i) {
      loc += 1 + static_cast<std::int64_t>(rng() % 20);
      s.atoms.push_back({R(loc, 10), 0.1 + 2.9 * U(rng)});
    }
    LevyModel m(s);
    for (const auto& a : m.atoms()) {
      auto j = derivative_jump(m, a.loc);
      EXPECT_NEAR(j.measured, a.mass / (s.drift * s.drift), std::max(1e-4, 3 * j.stderr_));
    }
    auto off = derivative_jump(m, R(loc * 10 + 3, 100));
    EXPECT_LE(std::fabs(off.measured), std::max(1e-4, 3 * off.stderr_));
  }
}

TEST(DerivativeJump, VolterraFallbackAgrees) {
  auto m = delta1();
  VolterraOptions vo;
  vo.tol = 1e-9;
  vo.h = 0.005;
  auto sol = u_volterra(m, 1.5, vo);
  auto r = one_sided_fd(sol, 1.0, 1, Side::Right, 1);
  auto l = one_sided_fd(sol, 1.0, 1, Side::Left, 1);
  EXPECT_NEAR(r.estimate - l.estimate, 1.0, 1e-3);
}

TEST(ConvJump, SignedJumpOfConvolutionPower) {
  auto m = delta1();
  for (int n = 2; n <= 3; ++n) {
    auto cj = conv_jump(m, n, R(n));
    EXPECT_NEAR(cj.measured, cj.predicted, std::max(1e-4, 3 * cj.stderr_));
    EXPECT_NEAR(cj.raw_jump, n % 2 == 0 ? 1.0 : -1.0, 1e-4);
  }
  EXPECT_THROW(conv_jump(m, 2, R(3)), PreconditionError);
  EXPECT_THROW(conv_jump(mixed(), 2, R(2)), PreconditionError);
}
