#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subpot/conv_engine.hpp"
#include "subpot/error.hpp"
#include "subpot/levy_core.hpp"

namespace subpot {

enum class Method { Series, Volterra, Inversion };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Series: return "series";
    case Method::Volterra: return "volterra";
    case Method::Inversion: return "inversion";
  }
  return "?";
}

struct DensityNode {
  double x = 0.0;
  double u_left = 0.0;
  double u_right = 0.0;
  double err_est = 0.0;
  Method method = Method::Volterra;
};

struct DensityGrid {
  std::uint64_t model_hash = 0;
  double q = 0.0;
  std::vector<DensityNode> nodes;
};

/// m(x) = (1 * (Pi-bar + q))(x) / delta.
inline double series_ratio(const LevyModel& m, double x) {
  return m.kernel_primitives(x).first / m.drift();
}

/// Smallest N with delta^{-1} m^{N+1} / (1 - m) < tol.
inline int series_order(const LevyModel& model, double m, double tol) {
  if (m <= 0.0) return 0;
  int N = 0;
  double bound = m / (model.drift() * (1.0 - m));
  while (bound >= tol && N < 10000) {
    bound *= m;
    ++N;
  }
  return N;
}

struct SeriesResult {
  double value = 0.0;
  double err_bound = 0.0;
  int terms_used = 0;
};

/// Alternating convolution series for u^(q) and its one-sided derivatives,
/// certified where m(x) <= 1/2.
class SeriesEvaluator {
 public:
  SeriesEvaluator(const LevyModel& model, double x_max, double tol = 1e-12)
      : model_(model), x_max_(x_max), tol_(tol),
        alg_(model, x_max, series_order(model, check_radius(model, x_max), tol) + 2) {}

  const ConvAlgebra& algebra() const { return alg_; }

  SeriesResult u(const Point& x) const {
    if (x.value < 0.0) throw DomainError("u_series requires x >= 0");
    if (x.value > x_max_ * (1.0 + 1e-12)) throw DomainError("x beyond the series horizon");
    double d = model_.drift();
    if (x.value == 0.0) return {1.0 / d, 0.0, 1};
    double m = series_ratio(model_, x.value);
    int N = std::min(series_order(model_, m, tol_), alg_.n_max());
    double sum = 0.0, scale = 1.0 / d;
    for (int n = 0; n <= N; ++n) {
      double t = alg_.eval(n, x, Side::Left, 1, 0) * scale;
      sum += (n % 2 == 0) ? t : -t;
      scale /= d;
    }
    double err = m > 0.0 ? std::pow(m, N + 1) / (d * (1.0 - m)) : 0.0;
    return {sum, err, N + 1};
  }
  SeriesResult u(double x) const { return u(Point::from_double(x)); }

  /// u'(x+) or u'(x-); err_bound is the geometric estimate from the last term.
  SeriesResult du(const Point& x, Side side) const {
    if (!(x.value > 0.0)) throw DomainError("du_series requires x > 0");
    double d = model_.drift();
    double m = series_ratio(model_, x.value);
    int N = alg_.n_max();
    double sum = 0.0, scale = 1.0 / (d * d), last = 0.0;
    for (int n = 1; n <= N; ++n) {
      double t = alg_.eval(n, x, side, 0, 0) * scale;
      sum += (n % 2 == 0) ? t : -t;
      last = std::fabs(t);
      scale /= d;
    }
    double err = last * m / std::max(1e-300, 1.0 - m) + 1e-14 * std::fabs(sum);
    return {sum, err, N};
  }
  SeriesResult du(double x, Side side) const { return du(Point::from_double(x), side); }

 private:
  static double check_radius(const LevyModel& model, double x_max) {
    double m = series_ratio(model, x_max);
    if (m > 0.5)
      throw PreconditionError("out-of-radius", "series ratio m(x) = " + std::to_string(m) +
                                                   " exceeds 1/2; use the Volterra solver");
    return m;
  }

  LevyModel model_;
  double x_max_;
  double tol_;
  ConvAlgebra alg_;
};

inline SeriesResult u_series(const LevyModel& model, double x, double tol = 1e-12) {
  if (!(x > 0.0)) throw DomainError("u_series requires x > 0");
  return SeriesEvaluator(model, x, tol).u(x);
}

/// Largest x with m(x) <= 1/2 (bisection), capped at x_cap.
inline double series_radius(const LevyModel& model, double x_cap = 1e4) {
  if (series_ratio(model, x_cap) <= 0.5) return x_cap;
  double lo = 0.0, hi = x_cap;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (series_ratio(model, mid) <= 0.5 ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Volterra product integration

struct VolterraOptions {
  double h = 0.01;
  double tol = 1e-6;
  int max_refine = 4;
  /// G_k points up to this order are inserted into the grid.
  int k_max = 3;
};

/// Piecewise-linear solution of delta u(x) = 1 - int_0^x u(x - y) k(y) dy.
struct PwSolution {
  std::vector<double> x;
  std::vector<double> u;
  std::vector<long> uidx;  // index on the uniform lattice, -1 otherwise
  double h_u = 0.0;
};

namespace detail {

struct GridPlan {
  std::vector<double> x;
  std::vector<long> uidx;
  double h_u = 0.0;
};

inline GridPlan volterra_grid(const LevyModel& model, double x_max, double h, int k_max) {
  GridPlan g;
  std::vector<std::pair<double, long>> pts;
  double x_g = 0.0;
  if (model.ac().present()) {
    x_g = std::min(x_max, 0.25);
    double gr = 2.0 / model.ac().beta();
    int M = std::max(4, static_cast<int>(std::ceil(gr * x_g / h)));
    for (int i = 0; i < M; ++i) pts.push_back({x_g * std::pow(static_cast<double>(i) / M, gr), -1});
  }
  long n_u = std::max<long>(1, static_cast<long>(std::ceil((x_max - x_g) / h - 1e-9)));
  g.h_u = (x_max - x_g) / n_u;
  for (long k = 0; k <= n_u; ++k) pts.push_back({k == n_u ? x_max : x_g + k * g.h_u, k});
  std::vector<double> extra;
  for (const auto& a : model.atoms())
    if (a.loc.value < x_max) extra.push_back(a.loc.value);
  std::vector<double> higher;
  for (int k = std::max(1, k_max); k >= 2; --k) {
    try {
      higher = atom_sums(model, k, x_max, 200000).values();
      break;
    } catch (const BudgetError&) {
      higher.clear();
    }
  }
  std::sort(pts.begin(), pts.end());
  auto too_close = [&](double v, double sep) {
    auto it = std::lower_bound(pts.begin(), pts.end(), std::make_pair(v, -2L));
    if (it != pts.end() && it->first - v < sep) return true;
    if (it != pts.begin() && v - std::prev(it)->first < sep) return true;
    return false;
  };
  // atoms replace nearby lattice nodes; higher sums only fill gaps
  for (double a : extra) {
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [&](const auto& p) { return p.first != 0.0 && p.first != x_max && std::fabs(p.first - a) < 0.05 * h; }),
              pts.end());
    if (!too_close(a, 1e-14)) pts.insert(std::lower_bound(pts.begin(), pts.end(), std::make_pair(a, -2L)), {a, -1});
  }
  for (double v : higher) {
    if (v >= x_max || too_close(v, 0.25 * h)) continue;
    pts.insert(std::lower_bound(pts.begin(), pts.end(), std::make_pair(v, -2L)), {v, -1});
  }
  for (const auto& p : pts) {
    g.x.push_back(p.first);
    g.uidx.push_back(p.second);
  }
  return g;
}

/// Refinement: every interval bisected, lattice indices doubled.
inline GridPlan refine(const GridPlan& c) {
  GridPlan f;
  f.h_u = 0.5 * c.h_u;
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    f.x.push_back(c.x[i]);
    f.uidx.push_back(c.uidx[i] >= 0 ? 2 * c.uidx[i] : -1);
    if (i + 1 < c.x.size()) {
      f.x.push_back(0.5 * (c.x[i] + c.x[i + 1]));
      bool lattice = c.uidx[i] >= 0 && c.uidx[i + 1] == c.uidx[i] + 1;
      f.uidx.push_back(lattice ? 2 * c.uidx[i] + 1 : -1);
    }
  }
  return f;
}

/// Hat-function weights of one interval given the primitives at its ends.
struct HatWeights {
  double lo_node = 0.0;  // weight of u at the left node x_j
  double hi_node = 0.0;  // weight of u at the right node x_{j+1}
};

inline HatWeights hat_weights(double y_lo, double y_hi, std::pair<double, double> K_lo,
                              std::pair<double, double> K_hi) {
  double h = y_hi - y_lo;
  double I0 = K_hi.first - K_lo.first;
  double I1 = K_hi.second - K_lo.second;
  return {(I1 - y_lo * I0) / h, (y_hi * I0 - I1) / h};
}

inline PwSolution solve_plan(const LevyModel& model, const GridPlan& g) {
  PwSolution s;
  s.x = g.x;
  s.uidx = g.uidx;
  s.h_u = g.h_u;
  std::size_t n = g.x.size();
  s.u.assign(n, 0.0);
  double d = model.drift();
  s.u[0] = 1.0 / d;
  std::unordered_map<long, std::pair<double, double>> cache;
  auto lattice_K = [&](long off) {
    auto it = cache.find(off);
    if (it != cache.end()) return it->second;
    auto v = model.kernel_primitives(off * g.h_u);
    cache.emplace(off, v);
    return v;
  };
  std::vector<std::pair<double, double>> K(n);
  for (std::size_t i = 1; i < n; ++i) {
    double xi = g.x[i];
    for (std::size_t j = 0; j <= i; ++j) {
      if (j == i) {
        K[j] = {0.0, 0.0};
      } else if (g.uidx[i] >= 0 && g.uidx[j] >= 0) {
        K[j] = lattice_K(g.uidx[i] - g.uidx[j]);
      } else {
        K[j] = model.kernel_primitives(xi - g.x[j]);
      }
    }
    double S = 0.0;
    for (std::size_t j = 0; j + 1 < i; ++j) {
      auto w = hat_weights(xi - g.x[j + 1], xi - g.x[j], K[j + 1], K[j]);
      S += w.lo_node * s.u[j] + w.hi_node * s.u[j + 1];
    }
    auto w = hat_weights(0.0, xi - g.x[i - 1], K[i], K[i - 1]);
    S += w.lo_node * s.u[i - 1];
    s.u[i] = (1.0 - S) / (d + w.hi_node);
  }
  return s;
}

/// Nystrom evaluation of the piecewise-linear solution at an arbitrary x.
inline double nystrom_eval(const LevyModel& model, const PwSolution& s, double x) {
  if (x <= 0.0) return 1.0 / model.drift();
  auto it = std::upper_bound(s.x.begin(), s.x.end(), x);
  std::size_t p = static_cast<std::size_t>(it - s.x.begin()) - 1;
  if (s.x[p] == x) return s.u[p];
  double d = model.drift();
  std::vector<std::pair<double, double>> K(p + 1);
  for (std::size_t j = 0; j <= p; ++j) K[j] = model.kernel_primitives(x - s.x[j]);
  double S = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    auto w = hat_weights(x - s.x[j + 1], x - s.x[j], K[j + 1], K[j]);
    S += w.lo_node * s.u[j] + w.hi_node * s.u[j + 1];
  }
  auto w = hat_weights(0.0, x - s.x[p], {0.0, 0.0}, K[p]);
  S += w.lo_node * s.u[p];
  return (1.0 - S) / (d + w.hi_node);
}

/// int_0^{x_end} e^{-lam x} u(x) dx for the piecewise-linear solution.
inline double pw_laplace(const PwSolution& s, double lam) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < s.x.size(); ++j) {
    double a = s.x[j], h = s.x[j + 1] - a;
    double t = lam * h;
    double Ea = std::exp(-lam * a);
    double i0 = -std::expm1(-t) / lam;
    double i1;
    if (t < 1e-3)
      i1 = h * h * (0.5 - t / 3.0 + t * t / 8.0 - t * t * t / 30.0);
    else
      i1 = (-std::expm1(-t) - t * std::exp(-t)) / (lam * lam);
    double slope = (s.u[j + 1] - s.u[j]) / h;
    total += Ea * (s.u[j] * i0 + slope * i1);
  }
  return total;
}

}  // namespace detail

/// Richardson pair of Volterra solutions on nested grids.
class VolterraSolution {
 public:
  VolterraSolution(LevyModel model, PwSolution coarse, PwSolution fine)
      : model_(std::move(model)), coarse_(std::move(coarse)), fine_(std::move(fine)) {}

  const LevyModel& model() const { return model_; }
  const PwSolution& coarse() const { return coarse_; }
  const PwSolution& fine() const { return fine_; }
  double x_max() const { return fine_.x.back(); }

  /// Extrapolated value and step-halving error estimate at any x in [0, x_max].
  std::pair<double, double> eval(double x) const {
    if (x < 0.0 || x > x_max() * (1.0 + 1e-12)) throw DomainError("x outside the Volterra grid");
    double uc = detail::nystrom_eval(model_, coarse_, x);
    double uf = detail::nystrom_eval(model_, fine_, x);
    return {uf + (uf - uc) / 3.0, std::fabs(uf - uc) / 3.0};
  }

  double max_err() const {
    double e = 0.0;
    for (std::size_t i = 0; i < coarse_.x.size(); ++i) e = std::max(e, std::fabs(coarse_.u[i] - fine_.u[2 * i]) / 3.0);
    return e;
  }

  DensityGrid grid() const {
    DensityGrid g;
    g.model_hash = model_.hash();
    g.q = model_.q();
    for (std::size_t i = 0; i < coarse_.x.size(); ++i) {
      double uc = coarse_.u[i], uf = fine_.u[2 * i];
      double v = uf + (uf - uc) / 3.0;
      g.nodes.push_back({coarse_.x[i], v, v, std::fabs(uf - uc) / 3.0, Method::Volterra});
    }
    return g;
  }

  /// int_0^{x_max} e^{-lam x} u(x) dx with Richardson extrapolation and its estimate.
  std::pair<double, double> laplace(double lam) const {
    double ic = detail::pw_laplace(coarse_, lam);
    double jf = detail::pw_laplace(fine_, lam);
    return {jf + (jf - ic) / 3.0, std::fabs(jf - ic) / 3.0};
  }

 private:
  LevyModel model_;
  PwSolution coarse_, fine_;
};

inline VolterraSolution u_volterra(const LevyModel& model, double x_max, const VolterraOptions& opt = {}) {
  if (!(x_max > 0.0)) throw DomainError("u_volterra requires x_max > 0");
  if (!(opt.h > 0.0) || !(opt.tol > 0.0)) throw DomainError("u_volterra requires h > 0 and tol > 0");
  double h = std::min(opt.h, x_max / 4.0);
  for (int r = 0;; ++r) {
    auto plan = detail::volterra_grid(model, x_max, h, opt.k_max);
    auto coarse = detail::solve_plan(model, plan);
    auto fine = detail::solve_plan(model, detail::refine(plan));
    VolterraSolution sol(model, std::move(coarse), std::move(fine));
    double err = sol.max_err();
    if (err <= opt.tol) return sol;
    if (r >= opt.max_refine) {
      if (err <= 10.0 * opt.tol) return sol;
      throw AccuracyError("convergence-failure",
                          "step-halving disagreement " + std::to_string(err) + " above 10 x tol after " +
                              std::to_string(r) + " refinements",
                          err);
    }
    h *= 0.5;
  }
}

// ---------------------------------------------------------------------------
// Bounded-variation split and transform cross-check

namespace detail {

// log of a bound on 1 * (Pi-bar + q)^{*n}(x) / drift^n, from Pi-bar + q <= F + kappa Phi_beta.
inline double log_term_bound(const LevyModel& m, double x, int n) {
  double d = m.drift();
  double F = m.total_atom_mass() + m.q();
  double kap = m.ac().kappa();
  double beta = m.ac().present() ? m.ac().beta() : 0.0;
  double best = -kInf, acc = 0.0;
  std::vector<double> logs;
  for (int j = 0; j <= n; ++j) {
    double cf = (n - j) > 0 ? kap : 1.0;
    if ((j > 0 && F == 0.0) || (n - j > 0 && kap == 0.0)) continue;
    double e = j + (n - j) * beta;
    double l = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
               (j > 0 ? j * std::log(F) : 0.0) + (n - j > 0 ? (n - j) * std::log(cf) : 0.0) + e * std::log(x) -
               std::lgamma(e + 1.0) - n * std::log(d);
    logs.push_back(l);
    best = std::max(best, l);
  }
  if (logs.empty()) return -kInf;
  for (double l : logs) acc += std::exp(l - best);
  return best + std::log(acc);
}

}  // namespace detail

struct BvSplit {
  std::vector<double> x;
  std::vector<double> u1;
  std::vector<double> u2;
  bool certified = true;
  double max_mismatch = 0.0;  // against the Volterra solution where uncertified
};

/// u = u1 - u2 with u1 the even-order and u2 the odd-order series terms.
inline BvSplit bv_split(const LevyModel& model, const std::vector<double>& xs, double tol = 1e-10,
                        const VolterraOptions& vopt = {}) {
  BvSplit out;
  out.x = xs;
  if (xs.empty()) return out;
  double x_max = *std::max_element(xs.begin(), xs.end());
  double d = model.drift();
  double m = series_ratio(model, x_max);
  int N;
  out.certified = m <= 0.5;
  if (out.certified) {
    N = series_order(model, m, tol);
  } else {
    N = 0;
    double prev = kInf;
    while (N < 400) {
      ++N;
      double t = detail::log_term_bound(model, x_max, N);
      if (t < prev && t < std::log(tol * 1e-2)) break;
      prev = t;
    }
  }
  ConvAlgebra alg(model, x_max, N);
  double peak = 0.0;
  for (double x : xs) {
    double u1 = 0.0, u2 = 0.0, scale = 1.0 / d;
    for (int n = 0; n <= N; ++n) {
      double t = x == 0.0 ? (n == 0 ? 1.0 : 0.0) : alg.eval(n, x, Side::Left, 1, 0);
      t *= scale;
      peak = std::max(peak, t);
      (n % 2 == 0 ? u1 : u2) += t;
      scale /= d;
    }
    out.u1.push_back(u1);
    out.u2.push_back(u2);
  }
  if (!out.certified) {
    if (peak > 1e8)
      throw AccuracyError("cancellation", "series extension terms reach " + std::to_string(peak), peak * 1e-16);
    auto sol = u_volterra(model, x_max, vopt);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto [v, e] = sol.eval(xs[i]);
      double mis = std::fabs(out.u1[i] - out.u2[i] - v);
      out.max_mismatch = std::max(out.max_mismatch, mis);
      if (mis > 10.0 * (e + vopt.tol) + 1e-14 * peak)
        throw AccuracyError("bv-extension", "series extension disagrees with the Volterra solution", mis);
    }
  }
  return out;
}

struct LaplaceCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
  double tail_bound = 0.0;
  double quad_err = 0.0;
  double x_max = 0.0;
};

/// int_0^inf e^{-lam x} u(x) dx against 1 / (q + psi(lam)).
inline LaplaceCheck laplace_crosscheck(const LevyModel& model, double lam, double tail_tol = 1e-9,
                                       const VolterraOptions& vopt = {}) {
  if (!(lam > 0.0)) throw DomainError("laplace_crosscheck requires lambda > 0");
  double d = model.drift();
  LaplaceCheck c;
  c.x_max = std::max(std::log(1.0 / (tail_tol * d * lam)) / lam, 1e-3);
  if (c.x_max > 1e4) throw PreconditionError("lambda-too-small", "lambda too small: x_max beyond 1e4");
  auto sol = u_volterra(model, c.x_max, vopt);
  auto [v, e] = sol.laplace(lam);
  c.tail_bound = std::exp(-lam * c.x_max) / (d * lam);
  c.lhs = v + 0.5 * c.tail_bound;
  c.quad_err = e;
  c.rhs = 1.0 / (model.q() + model.laplace_exponent(lam));
  c.abs_diff = std::fabs(c.lhs - c.rhs);
  return c;
}

}  // namespace subpot
