#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "subpot/conv_engine.hpp"
#include "subpot/error.hpp"
#include "subpot/levy_core.hpp"
#include "subpot/parallel.hpp"
#include "subpot/special.hpp"

namespace subpot {

using cplx = std::complex<double>;

/// (1 - e^{-z}) / z, with a Taylor branch near 0.
inline cplx one_minus_exp_over(cplx z) {
  if (std::abs(z) < 0.1) {
    cplx term = 1.0, s = 1.0;
    for (int k = 1; k < 14; ++k) {
      term *= -z / static_cast<double>(k + 1);
      s += term;
    }
    return s;
  }
  return (1.0 - std::exp(-z)) / z;
}

/// Laplace transform of Pi-bar + q at s, Re(s) >= 0.
inline cplx tail_laplace(const LevyModel& m, cplx s) {
  if (s.real() < 0.0) throw DomainError("tail_laplace requires Re(s) >= 0");
  bool axis_ok = m.q() == 0.0 && !m.mean().infinite;
  if (s.real() == 0.0 && !axis_ok)
    throw DomainError("tail_laplace on the imaginary axis needs q = 0 and a finite mean");
  if (s == cplx(0.0, 0.0) && !axis_ok) throw DomainError("pole at s = 0");
  cplx v = 0.0;
  for (const auto& a : m.atoms()) v += a.mass * a.loc.value * one_minus_exp_over(s * a.loc.value);
  if (m.q() != 0.0) v += m.q() / s;
  const auto& ac = m.ac();
  if (ac.present()) v += ac.kappa() * std::pow(s + ac.rate(), -ac.beta());
  return v;
}

inline cplx h_core(const LevyModel& m, int N, cplx s, double denom_floor) {
  cplx L = tail_laplace(m, s);
  double d = m.drift();
  cplx den = 1.0 + L / d;
  if (std::abs(den) < denom_floor)
    throw ValidationError("near-singular-denominator", "1 + L/drift vanishes on the contour");
  return std::pow(-L, N) / (std::pow(d, N + 1) * den);
}

/// (-L)^N / (s drift^{N+1} (1 + L/drift)).
inline cplx g_fn(const LevyModel& m, int N, cplx s, double denom_floor = 1e-10) {
  return h_core(m, N, s, denom_floor) / s;
}

/// (-L)^N / (drift^{N+1} (1 + L/drift)).
inline cplx h_fn(const LevyModel& m, int N, cplx s, double denom_floor = 1e-10) {
  return h_core(m, N, s, denom_floor);
}

struct ContourSpec {
  double lambda = 0.0;
  double theta_cut = 0.0;
  int N = 1;
  double panel_width = kPi;
  double near_width = kPi;   // panel width on [0, near_end]
  double near_end = 0.0;
  double eps = 0.05;
  double slope = -1.0;       // envelope exponent p in C theta^p
  double C = 0.0;
  double tail_bound = 0.0;
};

struct InversionOptions {
  int N = 0;                 // 0 selects automatically
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double theta_cut = std::numeric_limits<double>::quiet_NaN();
  double tol = 1e-8;
  double denom_floor = 1e-10;
  double theta_max = 1e7;
  std::size_t max_panels = 4000000;
  int threads = 0;
};

struct InversionResult {
  double value = 0.0;
  double err_est = 0.0;
  double finite_sum = 0.0;
  double integral = 0.0;
  double hermitian_residual = 0.0;
  std::size_t panels = 0;
  ContourSpec contour;
};

namespace detail {

// Integrand s^{k-1} h(s); k = 0 gives g.
inline cplx inv_integrand(const LevyModel& m, int N, int k, cplx s, double floor) {
  cplx h = h_core(m, N, s, floor);
  if (k == 0) return h / s;
  if (k == 1) return h;
  return h * std::pow(s, k - 1);
}

struct Envelope {
  double C = 0.0;
  double p = 0.0;
  double theta = 0.0;
  double tail = 0.0;
};

inline double envelope_theta(double C, double p, double amp, double tol) {
  if (C <= 0.0) return 1.0;
  double q = -(p + 1.0);
  return std::pow(0.5 * tol * q / (amp * C), 1.0 / (p + 1.0));
}

inline Envelope fit_envelope(const LevyModel& m, int N, int k, double lambda, double x, double eps,
                             double tol, double floor) {
  Envelope e;
  double beta = m.bg_index();
  e.p = N * (beta + eps - 1.0) - 1.0 + k;
  double amp = std::exp(lambda * x) / kPi;
  double cmax = 0.0;
  const int probes = 25;
  for (int i = 0; i < probes; ++i) {
    double th = std::pow(10.0, 4.0 * i / (probes - 1));
    double v = std::abs(inv_integrand(m, N, k, cplx(lambda, th), floor)) * std::pow(th, -e.p);
    cmax = std::max(cmax, v);
  }
  e.C = 2.0 * cmax;
  e.theta = std::max(1.0, envelope_theta(e.C, e.p, amp, tol));
  e.tail = e.C > 0.0 ? amp * e.C * std::pow(e.theta, e.p + 1.0) / -(e.p + 1.0) : 0.0;
  return e;
}

inline int required_order(double beta, double eps, int k) {
  return static_cast<int>(std::floor(k / (1.0 - beta - eps))) + 1;
}

}  // namespace detail

/// Chooses lambda, N and Theta for a k-th derivative evaluation at x.
inline ContourSpec plan_contour(const LevyModel& m, double x, int k, const InversionOptions& opt, bool axis) {
  double beta = m.bg_index();
  if (!(beta < 1.0)) throw PreconditionError("bg-index", "Blumenthal-Getoor index must be below 1");
  ContourSpec c;
  c.eps = std::min(0.05, (1.0 - beta) / 4.0);
  if (axis) {
    c.lambda = 0.0;
  } else if (std::isnan(opt.lambda)) {
    c.lambda = std::clamp(1.0 / x, 1e-3, 10.0);
  } else {
    if (!(opt.lambda > 0.0)) throw DomainError("contour abscissa must be positive");
    c.lambda = opt.lambda;
  }
  int n_req = detail::required_order(beta, c.eps, k);
  double osc = std::max({1.0, x});
  auto width_for = [&](int N) { return kPi / std::max(osc, N * m.max_atom()); };
  int N;
  detail::Envelope env;
  if (opt.N > 0) {
    N = opt.N;
    if (N < n_req)
      throw PreconditionError("n-too-small", "split order " + std::to_string(N) + " too small; requires N >= " +
                                                 std::to_string(n_req));
    env = detail::fit_envelope(m, N, k, c.lambda, x, c.eps, opt.tol, opt.denom_floor);
    if (std::isnan(opt.theta_cut) && env.theta > opt.theta_max) {
      int need = N + 1;
      for (; need < N + 40; ++need)
        if (detail::fit_envelope(m, need, k, c.lambda, x, c.eps, opt.tol, opt.denom_floor).theta <= opt.theta_max)
          break;
      throw PreconditionError("n-too-small", "tail bound needs theta beyond the budget with N = " +
                                                 std::to_string(N) + "; requires N >= " + std::to_string(need));
    }
  } else {
    N = std::max(n_req, static_cast<int>(std::ceil((k + 1.5) / (1.0 - beta - c.eps))));
    env = detail::fit_envelope(m, N, k, c.lambda, x, c.eps, opt.tol, opt.denom_floor);
    for (int extra = 0; extra < 12; ++extra) {
      double panels = env.theta / width_for(N);
      if (env.theta <= opt.theta_max && panels <= 2e4) break;
      auto next = detail::fit_envelope(m, N + 1, k, c.lambda, x, c.eps, opt.tol, opt.denom_floor);
      if (next.theta / width_for(N + 1) >= panels) break;
      ++N;
      env = next;
    }
    if (env.theta > opt.theta_max)
      throw PreconditionError("n-too-small", "no split order up to " + std::to_string(N) + " meets the tail budget");
  }
  c.N = N;
  c.C = env.C;
  c.slope = env.p;
  c.theta_cut = env.theta;
  c.tail_bound = env.tail;
  if (!std::isnan(opt.theta_cut)) {
    if (!(opt.theta_cut > 0.0)) throw DomainError("theta cut must be positive");
    c.theta_cut = opt.theta_cut;
    double amp = std::exp(c.lambda * x) / kPi;
    c.tail_bound = c.C > 0.0 ? amp * c.C * std::pow(c.theta_cut, c.slope + 1.0) / -(c.slope + 1.0) : 0.0;
  }
  c.panel_width = width_for(N);
  if (c.lambda > 0.0) {
    c.near_end = std::min(20.0 * c.lambda, c.theta_cut);
    c.near_width = std::min(c.panel_width, 0.5 * c.lambda);
  }
  return c;
}

namespace detail {

struct PanelSum {
  double value = 0.0;
  double err = 0.0;
};

inline PanelSum panel_quad(const LevyModel& m, const ContourSpec& c, int k, double x, double a, double b,
                           double ptol, double floor, int depth = 0) {
  const auto& g15 = gauss_legendre<15>();
  const auto& g8 = gauss_legendre<8>();
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto f = [&](double th) {
    cplx v = std::exp(cplx(0.0, th * x)) * inv_integrand(m, c.N, k, cplx(c.lambda, th), floor);
    return v.real();
  };
  double q15 = 0.0, q8 = 0.0;
  for (int i = 0; i < 15; ++i) q15 += g15.w[i] * f(mid + half * g15.x[i]);
  for (int i = 0; i < 8; ++i) q8 += g8.w[i] * f(mid + half * g8.x[i]);
  q15 *= half;
  q8 *= half;
  double err = std::fabs(q15 - q8);
  if (err <= ptol || depth >= 10) return {q15, err};
  auto l = panel_quad(m, c, k, x, a, mid, 0.5 * ptol, floor, depth + 1);
  auto r = panel_quad(m, c, k, x, mid, b, 0.5 * ptol, floor, depth + 1);
  return {l.value + r.value, l.err + r.err};
}

/// (e^{lambda x}/pi) Re int_0^Theta e^{i theta x} F_k(lambda + i theta) dtheta.
inline InversionResult contour_integral(const LevyModel& m, const ContourSpec& c, int k, double x,
                                        const InversionOptions& opt) {
  std::vector<std::pair<double, double>> panels;
  double t = 0.0;
  if (c.near_end > 0.0) {
    int n = std::max(1, static_cast<int>(std::ceil(c.near_end / c.near_width)));
    for (int i = 0; i < n; ++i) panels.push_back({c.near_end * i / n, c.near_end * (i + 1) / n});
    t = c.near_end;
  }
  if (c.theta_cut > t) {
    double span = c.theta_cut - t;
    double n_d = std::ceil(span / c.panel_width);
    if (n_d + panels.size() > static_cast<double>(opt.max_panels))
      throw BudgetError("panel-budget", "contour needs more panels than the budget allows");
    std::size_t n = static_cast<std::size_t>(std::max(1.0, n_d));
    for (std::size_t i = 0; i < n; ++i)
      panels.push_back({t + span * static_cast<double>(i) / n, t + span * static_cast<double>(i + 1) / n});
  }
  double amp = std::exp(c.lambda * x) / kPi;
  double ptol = 0.5 * opt.tol / (amp * std::max<std::size_t>(1, panels.size()));
  auto parts = parallel_map<PanelSum>(
      panels.size(),
      [&](std::size_t i) { return panel_quad(m, c, k, x, panels[i].first, panels[i].second, ptol, opt.denom_floor); },
      opt.threads);
  std::vector<double> vals(parts.size()), errs(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    vals[i] = parts[i].value;
    errs[i] = parts[i].err;
  }
  InversionResult r;
  r.integral = amp * pairwise_sum(vals);
  r.err_est = amp * pairwise_sum(errs) + c.tail_bound;
  r.panels = panels.size();
  r.contour = c;

  // The fitted envelope must still hold at 2 Theta.
  if (c.C > 0.0) {
    double th = 2.0 * c.theta_cut;
    double v = std::abs(inv_integrand(m, c.N, k, cplx(c.lambda, th), opt.denom_floor));
    if (v > c.C * std::pow(th, c.slope))
      throw AccuracyError("tail-envelope", "integrand exceeds the fitted decay envelope at 2 Theta", v);
  }
  double herm = 0.0;
  for (double th : {0.5, 3.0, 17.0}) {
    if (c.lambda == 0.0 && th == 0.0) continue;
    cplx a = inv_integrand(m, c.N, k, cplx(c.lambda, th), opt.denom_floor);
    cplx b = inv_integrand(m, c.N, k, cplx(c.lambda, -th), opt.denom_floor);
    herm = std::max(herm, std::abs(a - std::conj(b)));
  }
  r.hermitian_residual = herm;
  return r;
}

}  // namespace detail

/// u(x) = sum_{n<N} (-1)^n drift^{-(n+1)} (1 * f^{*n})(x) + Bromwich remainder.
inline InversionResult u_inversion(const LevyModel& m, const Point& x, const InversionOptions& opt = {}) {
  if (!(x.value > 0.0)) throw DomainError("u_inversion requires x > 0");
  ContourSpec c = plan_contour(m, x.value, 0, opt, false);
  auto r = detail::contour_integral(m, c, 0, x.value, opt);
  double d = m.drift();
  ConvAlgebra alg(m, x.value, c.N - 1);
  double fs = 1.0 / d;
  for (int n = 1; n < c.N; ++n)
    fs += (n % 2 == 0 ? 1.0 : -1.0) * std::pow(d, -(n + 1)) * alg.eval(n, x, Side::Left, 1);
  r.finite_sum = fs;
  r.value = fs + r.integral;
  return r;
}
inline InversionResult u_inversion(const LevyModel& m, double x, const InversionOptions& opt = {}) {
  return u_inversion(m, Point::from_double(x), opt);
}

namespace detail {

// D^k of the finite part: sum_{n=1}^{N-1} (-1)^n drift^{-(n+1)} D^{k-1} f^{*n}(x+-).
inline double dk_finite_sum(const LevyModel& m, int N, int k, const Point& x, Side side) {
  double d = m.drift();
  ConvAlgebra alg(m, x.value, std::max(1, N - 1));
  double fs = 0.0;
  for (int n = 1; n < N; ++n)
    fs += (n % 2 == 0 ? 1.0 : -1.0) * std::pow(d, -(n + 1)) * alg.eval(n, x, side, 0, k - 1);
  return fs;
}

}  // namespace detail

/// One-sided k-th derivative u^{(k)}(x-) or u^{(k)}(x+), k >= 1.
inline InversionResult dk_inversion(const LevyModel& m, const Point& x, int k, Side side,
                                    const InversionOptions& opt = {}) {
  if (!(x.value > 0.0)) throw DomainError("derivative inversion requires x > 0");
  if (k < 1) throw DomainError("derivative order must be at least 1");
  ContourSpec c = plan_contour(m, x.value, k, opt, false);
  auto r = detail::contour_integral(m, c, k, x.value, opt);
  r.finite_sum = detail::dk_finite_sum(m, c.N, k, x, side);
  r.value = r.finite_sum + r.integral;
  return r;
}

/// One-sided derivative u'(x-) or u'(x+).
inline InversionResult du_inversion(const LevyModel& m, const Point& x, Side side,
                                    const InversionOptions& opt = {}) {
  return dk_inversion(m, x, 1, side, opt);
}
inline InversionResult du_inversion(const LevyModel& m, double x, Side side, const InversionOptions& opt = {}) {
  return du_inversion(m, Point::from_double(x), side, opt);
}

/// u'(x+-) on the imaginary axis; needs q = 0 and a finite mean.
inline InversionResult du_infinity_contour(const LevyModel& m, const Point& x, Side side,
                                           const InversionOptions& opt = {}) {
  if (!(x.value > 0.0)) throw DomainError("du_infinity_contour requires x > 0");
  if (m.q() != 0.0) throw PreconditionError("killed", "the lambda = 0 contour needs q = 0");
  if (m.mean().infinite)
    throw PreconditionError("infinite-mean", "the lambda = 0 contour needs a finite mean");
  ContourSpec c = plan_contour(m, x.value, 1, opt, true);
  auto r = detail::contour_integral(m, c, 1, x.value, opt);
  r.finite_sum = detail::dk_finite_sum(m, c.N, 1, x, side);
  r.value = r.finite_sum + r.integral;
  return r;
}
inline InversionResult du_infinity_contour(const LevyModel& m, double x, Side side = Side::Right,
                                           const InversionOptions& opt = {}) {
  return du_infinity_contour(m, Point::from_double(x), side, opt);
}

}  // namespace subpot
