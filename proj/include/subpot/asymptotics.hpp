#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "subpot/conv_engine.hpp"
#include "subpot/density_series.hpp"
#include "subpot/error.hpp"
#include "subpot/laplace_inversion.hpp"
#include "subpot/levy_core.hpp"

namespace subpot {

struct AsymptoticCheck {
  std::string law;
  std::vector<double> x;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> ratio;
  bool pass = false;
  bool degenerate = false;
  std::optional<double> slope;
  std::string note;
};

/// Geometric grid from `from` to `to` (either direction), per_decade points per decade.
inline std::vector<double> geometric_grid(double from, double to, int per_decade = 6) {
  if (!(from > 0.0 && to > 0.0)) throw DomainError("geometric grid needs positive endpoints");
  double decades = std::fabs(std::log10(to / from));
  int n = std::max(2, static_cast<int>(std::ceil(decades * per_decade)) + 1);
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = from * std::pow(to / from, static_cast<double>(i) / (n - 1));
  g.back() = to;
  return g;
}

namespace detail {

// |v| strictly decreasing over the last three entries.
inline bool tail_decreasing(const std::vector<double>& v) {
  if (v.size() < 3) return false;
  std::size_t n = v.size();
  return std::fabs(v[n - 1]) < std::fabs(v[n - 2]) && std::fabs(v[n - 2]) < std::fabs(v[n - 3]);
}

// Sum of the alternating series terms k > n at x, and the k = n + 1 term alone.
inline std::pair<double, double> series_remainder(const LevyModel& m, double x, int n) {
  double d = m.drift();
  double r = series_ratio(m, x);
  if (r > 0.5) throw PreconditionError("out-of-radius", "grid point beyond the series radius");
  int extra = r > 0.0 ? static_cast<int>(std::ceil(std::log(1e-18) / std::log(r))) : 1;
  int top = n + 1 + std::clamp(extra, 1, 80);
  ConvAlgebra alg(m, x, top);
  double sum = 0.0, first = 0.0;
  for (int k = n + 1; k <= top; ++k) {
    double t = (k % 2 == 0 ? 1.0 : -1.0) * std::pow(d, -(k + 1)) * alg.eval(k, x, Side::Left, 1);
    if (k == n + 1) first = t;
    sum += t;
  }
  return {sum, first};
}

}  // namespace detail

/// Refined zero asymptotics: the series remainder after n terms is asymptotic to the next term.
inline AsymptoticCheck check_zero_series(const LevyModel& m, int n, std::vector<double> grid = {}) {
  if (n < 0) throw DomainError("n must be nonnegative");
  AsymptoticCheck c;
  c.law = "zero-series";
  if (grid.empty()) grid = geometric_grid(std::min(0.1, 0.5 * series_radius(m)), 1e-6);
  std::sort(grid.rbegin(), grid.rend());
  for (double x : grid) {
    auto [rem, next] = detail::series_remainder(m, x, n);
    c.x.push_back(x);
    c.lhs.push_back(std::fabs(rem));
    c.rhs.push_back(std::fabs(next));
    if (next == 0.0) {
      if (rem != 0.0) throw PreconditionError("shrink-grid", "next series term underflows; shrink the grid");
      c.ratio.push_back(1.0);
    } else {
      c.ratio.push_back(std::fabs(rem) / std::fabs(next));
    }
  }
  bool all_zero = std::all_of(c.rhs.begin(), c.rhs.end(), [](double v) { return v == 0.0; });
  if (all_zero) {
    c.degenerate = true;
    c.pass = true;
    c.note = "degenerate-exact";
    return c;
  }
  std::vector<double> dev;
  for (double r : c.ratio) dev.push_back(r - 1.0);
  c.pass = std::fabs(dev.back()) <= 0.05 && (detail::tail_decreasing(dev) || std::fabs(dev.back()) < 1e-12);
  return c;
}

/// Linear decay at zero with slope -(Pi(R) + q)/drift^2 iff Pi is finite.
inline AsymptoticCheck check_linear_zero(const LevyModel& m, std::vector<double> grid = {}) {
  AsymptoticCheck c;
  c.law = "linear-zero";
  if (grid.empty()) grid = geometric_grid(std::min(0.1, 0.5 * series_radius(m)), 1e-6);
  std::sort(grid.rbegin(), grid.rend());
  double d = m.drift();
  for (double x : grid) {
    auto [rem, next] = detail::series_remainder(m, x, 0);
    (void)next;
    c.x.push_back(x);
    c.lhs.push_back(rem / x);
  }
  if (m.finite_measure()) {
    double target = -(m.total_atom_mass() + m.q()) / (d * d);
    c.slope = target;
    if (target == 0.0) {
      c.rhs.assign(c.lhs.size(), 0.0);
      c.ratio.assign(c.lhs.size(), 1.0);
      c.degenerate = true;
      c.pass = std::all_of(c.lhs.begin(), c.lhs.end(), [](double v) { return v == 0.0; });
      c.note = "degenerate-exact";
      return c;
    }
    std::vector<double> dev;
    for (double v : c.lhs) {
      c.rhs.push_back(target);
      c.ratio.push_back(v / target);
      dev.push_back(v / target - 1.0);
    }
    c.pass = std::fabs(dev.back()) <= 0.05 && (detail::tail_decreasing(dev) || std::fabs(dev.back()) < 1e-12);
  } else {
    for (double v : c.lhs) {
      c.rhs.push_back(0.0);
      c.ratio.push_back(-v);
    }
    // (1/drift - u)/x increases monotonically over the final decade.
    std::size_t n = c.ratio.size();
    std::size_t from = 0;
    while (from < n && c.x[from] > 10.0 * c.x.back()) ++from;
    bool mono = n - from >= 3;
    for (std::size_t i = from + 1; i < n; ++i) mono = mono && c.ratio[i] > c.ratio[i - 1];
    c.pass = mono;
    c.note = "infinite measure: super-linear decay";
  }
  return c;
}

/// Derivative asymptotics at zero, leading terms with the negative sign.
inline AsymptoticCheck check_du_zero(const LevyModel& m, std::vector<double> grid = {},
                                     const InversionOptions& opt = {}) {
  double beta = m.bg_index();
  if (!(beta < 1.0)) throw PreconditionError("bg-index", "Blumenthal-Getoor index must be below 1");
  AsymptoticCheck c;
  c.law = "du-zero";
  double d = m.drift();
  bool finite = !m.ac().present();
  int n = 1;
  if (!finite)
    while (!(beta < static_cast<double>(n) / (n + 1))) ++n;
  c.note = finite ? "finite Pi-bar(0+): leading term -(q + Pi-bar(x))/drift^2 (negative sign)"
                  : "leading terms sum_{k<=" + std::to_string(n) + "} (-1)^k (q + Pi-bar)^{*k}/drift^{k+1}";
  if (grid.empty()) grid = geometric_grid(0.1, 1e-5);
  std::sort(grid.rbegin(), grid.rend());
  std::vector<double> res;
  for (double x : grid) {
    ConvAlgebra alg(m, x, n);
    double worst = 0.0, du_at = 0.0, lead_at = 0.0;
    for (Side side : {Side::Left, Side::Right}) {
      double lead = 0.0;
      for (int k = 1; k <= n; ++k)
        lead += (k % 2 == 0 ? 1.0 : -1.0) * std::pow(d, -(k + 1)) * alg.eval(k, Point::from_double(x), side);
      double du = du_inversion(m, x, side, opt).value;
      if (std::fabs(du - lead) >= worst) {
        worst = std::fabs(du - lead);
        du_at = du;
        lead_at = lead;
      }
    }
    c.x.push_back(x);
    c.lhs.push_back(du_at);
    c.rhs.push_back(lead_at);
    c.ratio.push_back(lead_at != 0.0 ? du_at / lead_at : 1.0);
    res.push_back(worst);
  }
  if (std::all_of(c.rhs.begin(), c.rhs.end(), [](double v) { return v == 0.0; })) {
    c.degenerate = true;
    c.pass = std::all_of(res.begin(), res.end(), [&](double v) { return v < opt.tol * 10; });
    c.note += "; degenerate-exact";
    return c;
  }
  c.pass = detail::tail_decreasing(res) && res.back() < 0.01 * std::fabs(c.rhs.back());
  return c;
}

/// u'(x+-) -> 0 at infinity for finite-mean models, on the lambda = 0 contour.
inline AsymptoticCheck check_du_infinity(const LevyModel& m, std::vector<double> grid = {},
                                         const InversionOptions& opt = {}) {
  if (m.q() != 0.0) throw PreconditionError("killed", "the infinity law needs q = 0");
  auto mean = m.mean();
  if (mean.infinite) throw PreconditionError("infinite-mean", "derivative decay at infinity needs a finite mean");
  AsymptoticCheck c;
  c.law = "du-infinity";
  double x_max = std::max(20.0 * mean.value, 40.0);
  if (grid.empty()) grid = geometric_grid(x_max / 8.0, x_max);
  std::sort(grid.begin(), grid.end());
  std::vector<double> err;
  for (double x : grid) {
    auto r = du_infinity_contour(m, x, Side::Right, opt);
    auto l = du_infinity_contour(m, x, Side::Left, opt);
    c.x.push_back(x);
    c.lhs.push_back(std::max(std::fabs(r.value), std::fabs(l.value)));
    c.rhs.push_back(0.0);
    c.ratio.push_back(c.lhs.back() * m.drift());
    err.push_back(std::max(r.err_est, l.err_est));
  }
  // Decrease over the last three points, allowing ties inside the error estimates.
  std::size_t n = c.lhs.size();
  bool dec = n >= 3;
  for (std::size_t i = n - 2; dec && i < n; ++i) dec = c.lhs[i] <= c.lhs[i - 1] + err[i] + err[i - 1];
  c.pass = dec && c.lhs.back() < 1e-3 / m.drift();
  return c;
}

/// u(x) -> 1/drift as x -> 0, checked at x = 1e-4 to 1e-3 relative accuracy.
inline AsymptoticCheck check_limit_zero(const LevyModel& m, double x = 1e-4) {
  AsymptoticCheck c;
  c.law = "limit-zero";
  double u = u_inversion(m, x).value;
  c.x = {x};
  c.lhs = {u};
  c.rhs = {1.0 / m.drift()};
  c.ratio = {u * m.drift()};
  c.pass = std::fabs(u - 1.0 / m.drift()) <= 1e-3;
  return c;
}

/// u(x) E[X_1] -> 1 at x >= 20 E[X_1] for finite-mean models with q = 0.
inline AsymptoticCheck check_limit_infinity(const LevyModel& m) {
  auto mean = m.mean();
  if (mean.infinite) throw PreconditionError("infinite-mean", "renewal limit needs a finite mean");
  if (m.q() != 0.0) throw PreconditionError("killed", "renewal limit needs q = 0");
  AsymptoticCheck c;
  c.law = "limit-infinity";
  double x = std::max(20.0 * mean.value, 40.0);
  double u = u_inversion(m, x).value;
  c.x = {x};
  c.lhs = {u};
  c.rhs = {1.0 / mean.value};
  c.ratio = {u * mean.value};
  c.pass = c.ratio[0] >= 0.98 && c.ratio[0] <= 1.02;
  return c;
}

}  // namespace subpot
