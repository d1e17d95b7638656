#include <cmath>

#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "subpot/levy_core.hpp"

using namespace subpot;

namespace {

LevyModel atomic(std::vector<std::pair<double, double>> atoms, double drift = 1.0, double q = 0.0) {
  ModelSpec s;
  s.drift = drift;
  s.q = q;
  for (auto [x, m] : atoms) s.atoms.push_back({Point::from_double(x), m});
  return LevyModel(s);
}

LevyModel with_ac(AcKind kind, double C, double alpha, double b = 0.0) {
  ModelSpec s;
  s.ac = {kind, C, alpha, b};
  return LevyModel(s);
}

// psi(l) = drift l + l int_0^inf e^{-ly} Pi-bar(y) dy by quadrature
double psi_quad(const LevyModel& m, double lam) {
  boost::math::quadrature::exp_sinh<double> es;
  double I = 0.0;
  std::vector<double> cuts = {0.0};
  for (const auto& a : m.atoms()) cuts.push_back(a.loc.value);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i], hi = cuts[i + 1];
    double mass = m.tail_plain(0.5 * (lo + hi)) - m.ac().tail(0.5 * (lo + hi));
    I += mass * (std::exp(-lam * lo) - std::exp(-lam * hi)) / lam;
  }
  if (m.ac().present()) I += es.integrate([&](double y) { return std::exp(-lam * y) * m.ac().tail(y); });
  return m.drift() * lam + lam * I;
}

}  // namespace

TEST(LevyCore, TailSideConvention) {
  auto m = atomic({{1.0, 2.0}, {3.0, 0.5}});
  EXPECT_DOUBLE_EQ(m.tail(1.0, Side::Left).value, 2.5);
  EXPECT_DOUBLE_EQ(m.tail(1.0, Side::Right).value, 0.5);
  EXPECT_DOUBLE_EQ(m.tail(2.0, Side::Left).value, 0.5);
  EXPECT_DOUBLE_EQ(m.tail(3.5, Side::Left).value, 0.0);
  EXPECT_DOUBLE_EQ(m.tail(0.0, Side::Right).value, 2.5);
}

TEST(LevyCore, TailIsNonincreasing) {
  auto m = atomic({{0.3, 1.0}, {0.7, 2.0}, {1.9, 0.25}});
  double prev = m.tail(1e-9, Side::Left).value;
  for (double y = 0.01; y < 3.0; y += 0.01) {
    double v = m.tail(y, Side::Left).value;
    EXPECT_LE(v, prev);
    EXPECT_LE(m.tail(y, Side::Right).value, v);
    prev = v;
  }
}

TEST(LevyCore, LaplaceExponentAgreesWithQuadrature) {
  std::vector<LevyModel> models = {atomic({{1.0, 1.0}}), atomic({{0.5, 0.7}, {1.2, 2.0}}, 2.0),
                                   with_ac(AcKind::Stable, 1.0, 0.5), with_ac(AcKind::Tempered, 0.7, 0.3, 2.0)};
  for (const auto& m : models)
    for (double lam : {0.1, 1.0, 3.0, 10.0}) EXPECT_NEAR(m.laplace_exponent(lam), psi_quad(m, lam), 1e-9 * lam + 1e-10);
}

TEST(LevyCore, StableLaplaceExponentClosedForm) {
  auto m = with_ac(AcKind::Stable, 1.0, 0.5);
  for (double lam : {0.5, 2.0, 8.0})
    EXPECT_NEAR(m.laplace_exponent(lam), lam + std::sqrt(kPi * lam), 1e-12 * lam);
}

TEST(LevyCore, MeanAndIndex) {
  auto d1 = atomic({{1.0, 1.0}});
  EXPECT_DOUBLE_EQ(d1.mean().value, 2.0);
  EXPECT_FALSE(d1.mean().infinite);
  EXPECT_DOUBLE_EQ(d1.bg_index(), 0.0);
  auto st = with_ac(AcKind::Stable, 1.0, 0.4);
  EXPECT_TRUE(st.mean().infinite);
  EXPECT_DOUBLE_EQ(st.bg_index(), 0.4);
  auto te = with_ac(AcKind::Tempered, 1.0, 0.5, 1.0);
  // E X_1 = 1 + int_0^inf y^{-1/2} e^{-y} dy
  EXPECT_NEAR(te.mean().value, 1.0 + std::sqrt(kPi), 1e-12);
}

TEST(LevyCore, ValidationNamesInvariants) {
  ModelSpec s;
  s.drift = 0.0;
  s.ac = {AcKind::Stable, 1.0, 1.2, 0.0};
  auto v = validate(s);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].invariant, "drift > 0");
  EXPECT_EQ(v[1].pointer, "/ac/alpha");
  EXPECT_THROW(LevyModel{s}, ValidationError);
}

TEST(LevyCore, RejectsUnorderedAtoms) {
  ModelSpec s;
  s.atoms = {{Point::from_double(2.0), 1.0}, {Point::from_double(1.0), 1.0}};
  EXPECT_THROW(LevyModel{s}, ValidationError);
}

TEST(LevyCore, ReciprocalFamily) {
  ModelSpec s;
  AtomFamily f;
  for (int j = 1; j <= 16; ++j) f.masses.push_back(1.0 / (j * j));
  f.cap = 10;
  s.family = f;
  LevyModel m(s);
  EXPECT_EQ(m.atoms().size(), 10u);
  EXPECT_EQ(m.atoms().front().loc.exact->den, 10);
  EXPECT_NEAR(m.truncation_mass(), [&] {
    double t = 0.0;
    for (int j = 11; j <= 16; ++j) t += 1.0 / (j * j);
    return t;
  }(), 1e-15);
  EXPECT_DOUBLE_EQ(m.bg_index(), 0.0);
}

TEST(LevyCore, HashTracksContent) {
  EXPECT_EQ(atomic({{1.0, 1.0}}).hash(), atomic({{1.0, 1.0}}).hash());
  EXPECT_NE(atomic({{1.0, 1.0}}).hash(), atomic({{1.0, 1.5}}).hash());
}
