#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "subpot/conv_engine.hpp"
#include "subpot/density_series.hpp"
#include "subpot/error.hpp"
#include "subpot/laplace_inversion.hpp"
#include "subpot/levy_core.hpp"

namespace subpot {

/// "U is (k+1)-times differentiable at x".
struct Verdict {
  int k = 0;
  bool differentiable = true;
};

/// Right-minus-left jump of u^{(order)}; predicted is NaN where the theory gives no value.
struct JumpMeasure {
  int order = 0;
  double predicted = 0.0;
  double measured = 0.0;
  double stderr_ = 0.0;
  bool present = false;
};

struct SmoothnessReport {
  Point x;
  std::optional<int> min_k;
  int k_max = 0;
  std::vector<Verdict> verdicts;
  std::vector<JumpMeasure> jumps;

  bool infinitely_differentiable() const { return !min_k.has_value(); }
};

struct FdEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Decision rule for a measured jump.
inline bool jump_present(double estimate, double stderr_) { return std::fabs(estimate) > 3.0 * stderr_; }

inline Point sub_points(const Point& a, const Point& b) {
  Point r{a.value - b.value, std::nullopt};
  if (a.exact && b.exact) {
    if (auto s = sub(*a.exact, *b.exact)) r = Point::from_rational(*s);
  }
  return r;
}

/// J_n(b): J_1(b) = Pi({b}), J_n(b) = sum_{a < b} m_a J_{n-1}(b - a).
inline double jump_coefficient(const LevyModel& m, int n, const Point& b) {
  if (n <= 0 || !(b.value > 0.0)) return 0.0;
  if (n == 1) return m.atom_mass_at(b);
  double s = 0.0;
  for (const auto& a : m.atoms()) {
    if (!(a.loc.value < b.value) || same_point(a.loc, b)) break;
    s += a.mass * jump_coefficient(m, n - 1, sub_points(b, a.loc));
  }
  return s;
}

/// order-th one-sided derivative at x from samples f(x -+ w t), t in (0, 1].
/// f returns (value, error estimate). Least-squares fit of degree order + 2.
inline FdEstimate one_sided_fd(const std::function<std::pair<double, double>(double)>& f, double x, int order,
                               Side side, double width, int nodes = 12) {
  if (order < 0) throw DomainError("derivative order must be nonnegative");
  int deg = order + 2;
  if (nodes < deg + 2) nodes = deg + 2;
  double sgn = side == Side::Right ? 1.0 : -1.0;
  Eigen::MatrixXd V(nodes, deg + 1);
  Eigen::VectorXd y(nodes);
  double noise = 0.0;
  for (int i = 0; i < nodes; ++i) {
    double t = static_cast<double>(i + 1) / nodes;
    auto [v, e] = f(x + sgn * width * t);
    y(i) = v;
    noise = std::max(noise, e);
    double p = 1.0;
    for (int j = 0; j <= deg; ++j) {
      V(i, j) = p;
      p *= t;
    }
  }
  // Row of the pseudo-inverse selecting coefficient `order`.
  Eigen::MatrixXd P = V.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::VectorXd c = P.row(order).transpose();
  double fact = std::tgamma(order + 1.0);
  double scale = fact * std::pow(sgn / width, order);
  Eigen::VectorXd coef = P * y;
  Eigen::VectorXd resid = y - V * coef;
  double dof = std::max(1, nodes - deg - 1);
  double sigma = std::sqrt(resid.squaredNorm() / dof);
  sigma = std::max(sigma, noise);
  sigma = std::max(sigma, 1e-15 * y.cwiseAbs().maxCoeff());
  return {coef(order) * scale, sigma * c.norm() * std::fabs(scale)};
}

namespace detail {

// Breakpoints of G_{k} (and 0) used to keep windows one-sided.
inline double window_to_breaks(const LevyModel& m, double x, Side side, int k, double cap) {
  double lim = x + cap;
  auto g = atom_sums(m, std::max(1, k), lim);
  double w = cap;
  Point px = Point::from_double(x);
  if (side == Side::Left) w = std::min(w, 0.5 * x);
  for (const auto& e : g.elements) {
    if (same_point(e.value, px)) continue;
    double d = e.value.value - x;
    if (side == Side::Right && d > 0.0) w = std::min(w, 0.5 * d);
    if (side == Side::Left && d < 0.0) w = std::min(w, -0.5 * d);
  }
  return w;
}

}  // namespace detail

/// One-sided derivative on a Volterra solution with a G_{k_max}-free window.
inline FdEstimate one_sided_fd(const VolterraSolution& sol, double x, int order, Side side, int k_max = 4,
                               double max_width = 0.1) {
  double cap = max_width;
  if (side == Side::Right) cap = std::min(cap, sol.x_max() - x);
  double w = detail::window_to_breaks(sol.model(), x, side, k_max, cap);
  const auto& xs = sol.fine().x;
  auto it = std::lower_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - xs.begin(), xs.size() - 1));
  double h = i > 0 ? xs[i] - xs[i - 1] : xs[1] - xs[0];
  if (i + 1 < xs.size()) h = std::max(h, xs[i + 1] - xs[i]);
  if (!(w >= 6.0 * h)) throw DomainError("window narrower than six grid nodes; shrink the grid spacing");
  return one_sided_fd([&](double y) { return sol.eval(y); }, x, order, side, w);
}

struct DerivativeJump {
  double predicted = 0.0;
  double measured = 0.0;
  double stderr_ = 0.0;
  std::string method;
};

namespace detail {

struct SidedDerivative {
  double left = 0.0, right = 0.0, err = 0.0;
};

// Both one-sided k-th derivatives; the contour integral is shared.
inline SidedDerivative sided_inversion(const LevyModel& m, const Point& x, int k, const InversionOptions& opt) {
  ContourSpec c = plan_contour(m, x.value, k, opt, false);
  auto r = contour_integral(m, c, k, x.value, opt);
  SidedDerivative s;
  s.left = dk_finite_sum(m, c.N, k, x, Side::Left) + r.integral;
  s.right = dk_finite_sum(m, c.N, k, x, Side::Right) + r.integral;
  s.err = r.err_est;
  return s;
}

}  // namespace detail

/// u'(x+) - u'(x-) against Pi({x}) / drift^2.
inline DerivativeJump derivative_jump(const LevyModel& m, const Point& x, const InversionOptions& opt = {}) {
  if (!(x.value > 0.0)) throw DomainError("derivative_jump requires x > 0");
  DerivativeJump j;
  j.predicted = m.atom_mass_at(x) / (m.drift() * m.drift());
  try {
    auto s = detail::sided_inversion(m, x, 1, opt);
    j.measured = s.right - s.left;
    j.stderr_ = 2.0 * s.err;
    j.method = "inversion";
  } catch (const PreconditionError&) {
    j.method = "volterra-fd";
  } catch (const BudgetError&) {
    j.method = "volterra-fd";
  }
  if (j.method == "volterra-fd") {
    VolterraOptions vo;
    vo.tol = 1e-9;
    vo.h = std::min(0.005, x.value / 40.0);
    auto sol = u_volterra(m, x.value + 0.3, vo);
    auto r = one_sided_fd(sol, x.value, 1, Side::Right, 1);
    auto l = one_sided_fd(sol, x.value, 1, Side::Left, 1);
    j.measured = r.estimate - l.estimate;
    j.stderr_ = std::hypot(r.stderr_, l.stderr_);
  }
  return j;
}
inline DerivativeJump derivative_jump(const LevyModel& m, double x, const InversionOptions& opt = {}) {
  return derivative_jump(m, Point::from_double(x), opt);
}

struct SmoothnessOptions {
  int k_max = 4;
  bool measure = true;
  std::size_t budget = kDefaultBudget;
  InversionOptions inversion;
};

/// Differentiability verdicts from G_k membership, with measured jumps of u^{(j)}.
inline SmoothnessReport classify_point(const LevyModel& m, const Point& x, const SmoothnessOptions& opt = {}) {
  if (!(x.value > 0.0)) throw DomainError("classify_point requires x > 0");
  if (opt.k_max < 1) throw DomainError("k_max must be at least 1");
  SmoothnessReport rep;
  rep.x = x;
  rep.k_max = opt.k_max;
  auto g = atom_sums(m, opt.k_max, x.value * (1.0 + 1e-9), opt.budget);
  if (const auto* e = g.find(x)) rep.min_k = e->min_jumps;
  for (int k = 1; k <= opt.k_max; ++k) rep.verdicts.push_back({k, !(rep.min_k && *rep.min_k <= k)});
  if (!opt.measure) return rep;
  double d = m.drift();
  for (int order = 1; order <= opt.k_max; ++order) {
    JumpMeasure jm;
    jm.order = order;
    if (!rep.min_k || *rep.min_k > order)
      jm.predicted = 0.0;
    else if (*rep.min_k == order)
      jm.predicted = jump_coefficient(m, order, x) / std::pow(d, order + 1);
    else
      jm.predicted = std::numeric_limits<double>::quiet_NaN();
    auto s = detail::sided_inversion(m, x, order, opt.inversion);
    jm.measured = s.right - s.left;
    jm.stderr_ = 2.0 * s.err;
    jm.present = jump_present(jm.measured, jm.stderr_);
    rep.jumps.push_back(jm);
  }
  return rep;
}
inline SmoothnessReport classify_point(const LevyModel& m, double x, const SmoothnessOptions& opt = {}) {
  return classify_point(m, Point::from_double(x), opt);
}

struct ConvJump {
  double predicted = 0.0;  // J_n(b) > 0
  double measured = 0.0;   // (-1)^n times the measured jump
  double raw_jump = 0.0;   // right minus left of D^{n-1} Pi-bar^{*n} at b
  double stderr_ = 0.0;
};

/// Jump of the (n-1)-th derivative of Pi-bar^{*n} at b in G_n \ G_{n-1}.
inline ConvJump conv_jump(const LevyModel& m, int n, const Point& b) {
  if (!m.purely_atomic()) throw PreconditionError("not-atomic", "conv_jump needs a purely atomic model");
  if (n < 2) throw DomainError("conv_jump needs n >= 2");
  if (!(b.value > 0.0)) throw DomainError("conv_jump needs b > 0");
  auto g = atom_sums(m, n, 2.0 * b.value);
  const auto* e = g.find(b);
  if (!e || e->min_jumps != n)
    throw PreconditionError("classification", "point is not in G_n minus G_{n-1}");
  ModelSpec spec = m.spec();
  spec.q = 0.0;
  LevyModel m0(spec);
  double w = 0.25 * b.value;
  for (const auto& el : g.elements) {
    if (same_point(el.value, b)) continue;
    w = std::min(w, 0.5 * std::fabs(el.value.value - b.value));
  }
  ConvAlgebra alg(m0, b.value + w, n);
  auto f = [&](double y) {
    double v = alg.eval(n, y, Side::Left);
    return std::make_pair(v, 1e-15 * std::max(1.0, std::fabs(v)));
  };
  auto r = one_sided_fd(f, b.value, n - 1, Side::Right, w);
  auto l = one_sided_fd(f, b.value, n - 1, Side::Left, w);
  ConvJump cj;
  cj.predicted = jump_coefficient(m, n, b);
  cj.raw_jump = r.estimate - l.estimate;
  cj.measured = (n % 2 == 0 ? 1.0 : -1.0) * cj.raw_jump;
  cj.stderr_ = std::hypot(r.stderr_, l.stderr_);
  return cj;
}

}  // namespace subpot
