#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "subpot/error.hpp"
#include "subpot/levy_core.hpp"
#include "subpot/rational.hpp"
#include "subpot/special.hpp"

namespace subpot {

inline constexpr std::size_t kDefaultBudget = 10'000'000;

inline bool same_point(const Point& a, const Point& b) {
  if (a.exact && b.exact) return *a.exact == *b.exact;
  return std::fabs(a.value - b.value) <= 1e-12 * std::max(std::fabs(a.value), std::fabs(b.value));
}

inline bool point_less(const Point& a, const Point& b) {
  if (a.value != b.value) return a.value < b.value;
  if (a.exact && b.exact) return *a.exact < *b.exact;
  return false;
}

inline Point add_points(const Point& a, const Point& b) {
  Point r{a.value + b.value, std::nullopt};
  if (a.exact && b.exact) {
    if (auto s = add(*a.exact, *b.exact)) r = Point::from_rational(*s);
  }
  return r;
}

inline Point scale_point(const Point& a, int t) {
  Point r{a.value * t, std::nullopt};
  if (a.exact) {
    if (auto s = make_rational(static_cast<__int128>(a.exact->num) * t, a.exact->den))
      r = Point::from_rational(*s);
  }
  return r;
}

struct WeightedShift {
  Point at;
  double w = 0.0;
};

/// Sorts and merges coincident shifts, summing their weights.
inline void merge_shifts(std::vector<WeightedShift>& v) {
  std::sort(v.begin(), v.end(), [](const WeightedShift& a, const WeightedShift& b) { return point_less(a.at, b.at); });
  std::vector<WeightedShift> out;
  out.reserve(v.size());
  for (auto& e : v) {
    if (!out.empty() && same_point(out.back().at, e.at)) {
      out.back().w += e.w;
    } else {
      out.push_back(e);
    }
  }
  v.swap(out);
}

// ---------------------------------------------------------------------------
// Atom-sum sets G_k

struct AtomSumEntry {
  Point value;
  int min_jumps = 0;
  double representation_count = 0.0;
};

struct AtomSumSet {
  int k = 0;
  double x_max = 0.0;
  std::vector<AtomSumEntry> elements;

  /// Element equal to x, if present.
  const AtomSumEntry* find(const Point& x) const {
    auto it = std::lower_bound(elements.begin(), elements.end(), x.value - 1e-12 * std::fabs(x.value),
                               [](const AtomSumEntry& e, double v) { return e.value.value < v; });
    for (; it != elements.end() && it->value.value <= x.value + 1e-12 * std::fabs(x.value); ++it)
      if (same_point(it->value, x)) return &*it;
    return nullptr;
  }

  /// Smallest j <= k with x in G_j.
  std::optional<int> min_k(const Point& x) const {
    if (auto e = find(x)) return e->min_jumps;
    return std::nullopt;
  }

  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& e : elements) v.push_back(e.value.value);
    return v;
  }
};

/// G_k: sums of at most k atom locations in (0, x_max], with the minimal number
/// of summands and the number of multisets realizing each value.
inline AtomSumSet atom_sums(const std::vector<Atom>& atoms, int k, double x_max,
                            std::size_t budget = kDefaultBudget) {
  if (k < 1) throw DomainError("atom_sums requires k >= 1");
  if (!(x_max > 0.0)) throw DomainError("atom_sums requires x_max > 0");
  struct State {
    Point v;
    std::vector<double> cnt;
  };
  double lim = x_max * (1.0 + 1e-12);
  std::vector<State> states;
  states.push_back({Point::from_rational(Rational{0, 1}), std::vector<double>(k + 1, 0.0)});
  states[0].cnt[0] = 1.0;
  std::size_t produced = 1;
  for (const auto& a : atoms) {
    if (a.loc.value > lim) continue;
    std::vector<State> next = states;
    for (const auto& s : states) {
      int used = 0;
      while (used <= k && s.cnt[used] == 0.0) ++used;
      for (int t = 1; used + t <= k; ++t) {
        Point v = add_points(s.v, scale_point(a.loc, t));
        if (v.value > lim) break;
        State ns{v, std::vector<double>(k + 1, 0.0)};
        for (int j = 0; j + t <= k; ++j) ns.cnt[j + t] = s.cnt[j];
        next.push_back(std::move(ns));
        if (++produced > budget)
          throw BudgetError("budget", "atom_sums exceeded the node budget of " + std::to_string(budget) +
                                          " partial sums at k=" + std::to_string(k));
      }
    }
    std::sort(next.begin(), next.end(), [](const State& x, const State& y) { return point_less(x.v, y.v); });
    states.clear();
    for (auto& s : next) {
      if (!states.empty() && same_point(states.back().v, s.v)) {
        for (int j = 0; j <= k; ++j) states.back().cnt[j] += s.cnt[j];
      } else {
        states.push_back(std::move(s));
      }
    }
  }
  AtomSumSet out;
  out.k = k;
  out.x_max = x_max;
  for (const auto& s : states) {
    if (s.v.value <= 0.0) continue;
    AtomSumEntry e{s.v, 0, 0.0};
    for (int j = 1; j <= k; ++j) {
      if (s.cnt[j] > 0.0 && e.min_jumps == 0) e.min_jumps = j;
      e.representation_count += s.cnt[j];
    }
    if (e.min_jumps > 0) out.elements.push_back(e);
  }
  return out;
}

inline AtomSumSet atom_sums(const LevyModel& m, int k, double x_max, std::size_t budget = kDefaultBudget) {
  return atom_sums(m.atoms(), k, x_max, budget);
}

// ---------------------------------------------------------------------------
// Closed-form convolution algebra
//
// Pi-bar + q = A + P with A = sum_s w_s H(. - s) (w_0 = q + sum m, w_a = -m_a)
// and P = kappa Phi_beta e^{-b.}. Then
//   f^{*n} = sum_j C(n,j) kappa^{n-j} sum_s W_j(s) T(j, (n-j) beta, b; . - s)
// with W_j the j-fold discrete convolution of w.

/// D^r applied to T(mu, nu, b; z); negative mu encodes derivatives beyond the Heaviside factors.
inline double tfun_general(int mu, double nu, double b, double z, Side side, bool at_zero) {
  if (mu >= 0) return tfun_side(mu, nu, b, z, side, at_zero);
  int r = -mu;
  if (b == 0.0) return tfun_side(0, nu - r, 0.0, z, side, at_zero);
  double s = 0.0;
  for (int i = 0; i <= r; ++i) {
    double t = tfun_side(0, nu - i, b, z, side, at_zero);
    if (t == 0.0) continue;
    s += binomial(r, i) * std::pow(-b, r - i) * t;
  }
  return s;
}

class ConvAlgebra {
 public:
  ConvAlgebra(const LevyModel& model, double x_max, int n_max, std::size_t budget = kDefaultBudget)
      : model_(model), x_max_(x_max), n_max_(std::max(0, n_max)) {
    const auto& ac = model.ac();
    beta_ = ac.present() ? ac.beta() : 0.0;
    kappa_ = ac.kappa();
    b_ = ac.rate();
    std::vector<WeightedShift> w;
    double w0 = model.q() + model.total_atom_mass();
    if (w0 != 0.0) w.push_back({Point::from_rational(Rational{0, 1}), w0});
    double lim = x_max * (1.0 + 1e-12) + 1e-300;
    for (const auto& a : model.atoms())
      if (a.loc.value <= lim) w.push_back({a.loc, -a.mass});
    W_.push_back({{Point::from_rational(Rational{0, 1}), 1.0}});
    std::size_t total = 1;
    for (int j = 1; j <= n_max_; ++j) {
      std::vector<WeightedShift> next;
      for (const auto& p : W_.back()) {
        for (const auto& e : w) {
          Point s = add_points(p.at, e.at);
          if (s.value > lim) continue;
          next.push_back({s, p.w * e.w});
        }
        if (next.size() > budget)
          throw BudgetError("budget", "convolution shift table exceeded budget at order " + std::to_string(j));
      }
      merge_shifts(next);
      total += next.size();
      if (total > budget)
        throw BudgetError("budget", "convolution shift table exceeded budget at order " + std::to_string(j));
      W_.push_back(std::move(next));
    }
  }

  int n_max() const { return n_max_; }
  double x_max() const { return x_max_; }
  const LevyModel& model() const { return model_; }
  const std::vector<WeightedShift>& W(int j) const { return W_.at(j); }

  /// All shift points of orders 0..n within the horizon.
  std::vector<Point> shifts(int n) const {
    std::vector<WeightedShift> all;
    for (int j = 0; j <= std::min(n, n_max_); ++j)
      for (const auto& e : W_[j]) all.push_back({e.at, 1.0});
    merge_shifts(all);
    std::vector<Point> out;
    for (const auto& e : all) out.push_back(e.at);
    return out;
  }

  /// D^deriv (Phi_extra * f^{*n})(x) with one-sided limits at shifts; extra in {0, 1}.
  double eval(int n, const Point& x, Side side, int extra = 0, int deriv = 0) const {
    if (n > n_max_) throw DomainError("convolution order beyond the prepared table");
    if (x.value > x_max_ * (1.0 + 1e-12) + 1e-300) throw DomainError("x beyond the prepared horizon");
    double total = 0.0;
    int j_lo = kappa_ == 0.0 ? n : 0;
    for (int j = j_lo; j <= n; ++j) {
      double c = binomial(n, j) * (n - j == 0 ? 1.0 : std::pow(kappa_, n - j));
      double nu = (n - j) * beta_;
      int mu = j + extra - deriv;
      double s = 0.0;
      if (far_field(j, x.value)) {
        total += c * far_term(j, nu, extra - deriv, x.value, side);
        continue;
      }
      for (const auto& e : W_[j]) {
        if (e.at.value > x.value + 1e-12 * std::fabs(x.value)) break;
        bool at_zero = same_point(e.at, x);
        double z = at_zero ? 0.0 : x.value - e.at.value;
        if (z < 0.0) continue;
        double t = tfun_general(mu, nu, b_, z, side, at_zero);
        if (t != 0.0) s += e.w * t;
      }
      total += c * s;
    }
    return total;
  }
  double eval(int n, double x, Side side, int extra = 0, int deriv = 0) const {
    return eval(n, Point::from_double(x), side, extra, deriv);
  }

 private:
  // With q = 0 the atomic part A has compact support [0, a_max], so A^{*j}
  // vanishes beyond j a_max. Far from that support the shift sum cancels
  // catastrophically; integrate against the smooth remainder instead.
  bool far_field(int j, double x) const {
    if (j == 0 || model_.q() != 0.0 || W_[j].empty()) return false;
    double span = j * model_.max_atom();
    return x > 2.0 * span + 1.0;
  }

  double far_term(int j, double nu, int e, double x, Side side) const {
    if (nu == 0.0) {
      if (e <= 0) return 0.0;
      if (e == 1) {
        double mom = 0.0;
        for (const auto& a : model_.atoms()) mom += a.mass * a.loc.value;
        return std::pow(mom, j);
      }
    }
    const auto& W = W_[j];
    const auto& gl = gauss_legendre<20>();
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < W.size(); ++p) {
      double lo = W[p].at.value, hi = W[p + 1].at.value;
      if (!(hi > lo)) continue;
      double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (std::size_t i = 0; i < gl.x.size(); ++i) {
        double y = mid + half * gl.x[i];
        double a = 0.0;
        for (std::size_t k = 0; k <= p; ++k) a += W[k].w * phi(j, y - W[k].at.value);
        if (a == 0.0) continue;
        double f = nu == 0.0 ? tfun_general(e, 0.0, 0.0, x - y, side, false)
                             : tfun_general(e, nu, b_, x - y, side, false);
        s += gl.w[i] * half * a * f;
      }
    }
    return s;
  }

  LevyModel model_;
  double x_max_;
  int n_max_;
  double beta_ = 0.0, kappa_ = 0.0, b_ = 0.0;
  std::vector<std::vector<WeightedShift>> W_;
};

/// (Pi-bar + q)^{*n}(x); the side only matters for n = 1.
inline double conv_tail_power(const LevyModel& m, int n, const Point& x, Side side = Side::Left) {
  if (!(x.value > 0.0)) throw DomainError("conv_tail_power requires x > 0");
  if (n < 1) throw DomainError("conv_tail_power requires n >= 1");
  if (n == 1) {
    auto t = m.tail(x, side);
    return t.value + m.q();
  }
  ConvAlgebra alg(m, x.value, n);
  return alg.eval(n, x, side);
}
inline double conv_tail_power(const LevyModel& m, int n, double x, Side side = Side::Left) {
  return conv_tail_power(m, n, Point::from_double(x), side);
}

/// Independent check of conv_tail_power by recursive tanh-sinh quadrature on
/// breakpoint-split panels (n <= 3). left_fold selects (f^{*(n-1)}) * f versus f * f^{*(n-1)}.
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
  return ts;
}

/// int_0^z F(z - y) G(y) dy on panels split where either factor breaks. Each
/// panel end is kept as the pair (y, z - y) so one-sided arguments never
/// cross a breakpoint through rounding.
template <class F, class G>
double split_convolution(double z, const std::vector<double>& f_breaks, const std::vector<double>& g_breaks,
                         F&& fa, G&& ga, double tol) {
  std::vector<std::pair<double, double>> bp{{0.0, z}, {z, 0.0}};
  for (double g : f_breaks)
    if (g > 0.0 && g < z) bp.push_back({z - g, g});
  for (double a : g_breaks)
    if (a > 0.0 && a < z) bp.push_back({a, z - a});
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end(),
                       [](const auto& a, const auto& b) { return std::fabs(a.first - b.first) < 1e-13; }),
           bp.end());
  auto& ts = tanh_sinh_rule();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    auto [a, za] = bp[i];
    auto [b, zb] = bp[i + 1];
    if (b - a < 1e-12) continue;
    total += ts.integrate(
        [&](double y, double yc) {
          double left = yc < 0.0 ? -yc : y - a;
          double right = yc > 0.0 ? yc : b - y;
          if (left <= 0.0 || right <= 0.0) return 0.0;
          bool near_left = left < right;
          double yy = near_left ? a + left : b - right;
          double zy = near_left ? za - left : zb + right;
          return fa(zy) * ga(yy);
        },
        a, b, tol);
  }
  return total;
}

/// Independent check of conv_tail_power by recursive tanh-sinh quadrature on
/// breakpoint-split panels (n <= 3). left_fold selects (f^{*(n-1)}) * f versus f * f^{*(n-1)}.
inline double conv_tail_power_quad(const LevyModel& m, int n, double x, bool left_fold = true,
                                   double tol = 1e-11) {
  if (!(x > 0.0)) throw DomainError("conv_tail_power_quad requires x > 0");
  auto f = [&m](double y) { return y <= 0.0 ? 0.0 : m.tail_plain(y) + m.q(); };
  if (n == 1) return f(x);
  if (n > 3) throw DomainError("quadrature cross-check supports n <= 3");
  std::vector<double> atoms;
  for (const auto& a : m.atoms()) atoms.push_back(a.loc.value);
  auto f2 = [&](double z) {
    if (z <= 0.0) return 0.0;
    return split_convolution(z, atoms, atoms, f, f, tol);
  };
  if (n == 2) return f2(x);
  std::vector<double> g2 = atom_sums(m.atoms(), 2, x).values();
  if (left_fold) return split_convolution(x, g2, atoms, f2, f, tol);
  return split_convolution(x, atoms, g2, f, f2, tol);
}

// ---------------------------------------------------------------------------
// Sampled convolution grids

struct ConvSegment {
  double a = 0.0, b = 0.0;
  std::vector<double> nodes;
  std::vector<double> values;
  /// First piece at an AC singularity: f(y) ~ y^gamma g(y), g stored as a
  /// polynomial in t = y / b (coefficients low to high).
  bool product = false;
  double gamma = 0.0;
  std::vector<double> g_coeffs;
};

class ConvGrid {
 public:
  int n = 1;
  double x_max = 0.0;
  std::vector<double> breakpoints;
  std::vector<ConvSegment> segments;

  /// Samples f^{*n} on breakpoint-aligned Chebyshev-Lobatto pieces of [0, x_max].
  static ConvGrid build(const ConvAlgebra& alg, int n, double x_max, int degree = 16) {
    if (x_max > alg.x_max() * (1.0 + 1e-12)) throw DomainError("grid horizon beyond the algebra horizon");
    ConvGrid g;
    g.n = n;
    g.x_max = x_max;
    std::vector<Point> bps = alg.shifts(n);
    for (const auto& p : bps)
      if (p.value < x_max) g.breakpoints.push_back(p.value);
    if (g.breakpoints.empty() || g.breakpoints.front() != 0.0) g.breakpoints.insert(g.breakpoints.begin(), 0.0);
    g.breakpoints.push_back(x_max);
    bool ac = alg.model().ac().present();
    double beta = ac ? alg.model().ac().beta() : 0.0;
    for (std::size_t i = 0; i + 1 < g.breakpoints.size(); ++i) {
      double a = g.breakpoints[i], b = g.breakpoints[i + 1];
      if (!(b > a)) continue;
      std::vector<std::pair<double, double>> pieces;
      if (ac) {
        // geometric grading toward the left end, where fractional powers start
        double r = 0.5;
        double hi = b;
        for (int lvl = 0; lvl < 40; ++lvl) {
          double lo = a + (b - a) * std::pow(r, lvl + 1);
          pieces.push_back({lo, hi});
          hi = lo;
        }
        pieces.push_back({a, hi});
        std::reverse(pieces.begin(), pieces.end());
      } else {
        pieces.push_back({a, b});
      }
      for (std::size_t p = 0; p < pieces.size(); ++p) {
        ConvSegment s;
        s.a = pieces[p].first;
        s.b = pieces[p].second;
        s.nodes = lobatto_nodes(degree, s.a, s.b);
        s.values.resize(s.nodes.size());
        bool singular_start = ac && p == 0 && a == 0.0 && n * beta < 1.0 + 1e-12;
        if (singular_start) {
          s.product = true;
          s.gamma = n * beta - 1.0;
          // fit g(y) = y^{-gamma} f(y) at 5 interior Chebyshev points of [0, b]
          const int deg = 4;
          std::vector<double> t(deg + 1), gv(deg + 1);
          for (int k = 0; k <= deg; ++k) {
            t[k] = 0.5 * (1.0 - std::cos(kPi * (k + 0.5) / (deg + 1)));
            double y = t[k] * s.b;
            gv[k] = std::pow(y, -s.gamma) * alg.eval(n, y, Side::Left);
          }
          s.g_coeffs = fit_poly(t, gv);
          for (std::size_t k = 0; k < s.nodes.size(); ++k) {
            double y = s.nodes[k];
            s.values[k] = k == 0 ? alg.eval(n, Point::from_rational(Rational{0, 1}), Side::Right)
                                 : alg.eval(n, y, Side::Left);
          }
        } else {
          for (std::size_t k = 0; k < s.nodes.size(); ++k) {
            Side side = k == 0 ? Side::Right : Side::Left;
            Point y = Point::from_double(s.nodes[k]);
            if (k == 0 && p == 0) y = bp_point(bps, a);
            if (k + 1 == s.nodes.size() && p + 1 == pieces.size()) y = bp_point(bps, b);
            s.values[k] = alg.eval(n, y, side);
          }
        }
        g.segments.push_back(std::move(s));
      }
    }
    return g;
  }

  /// One-sided values at every node, as CSV rows x, n, value_left, value_right.
  std::string to_csv() const {
    std::string out = "x,n,value_left,value_right\n";
    char buf[160];
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      bool last_seg = i + 1 == segments.size();
      for (std::size_t k = 0; k < s.nodes.size(); ++k) {
        bool last_node = k + 1 == s.nodes.size();
        if (last_node && !last_seg) continue;
        double left = s.values[k], right = s.values[k];
        if (k == 0) left = i == 0 ? 0.0 : segments[i - 1].values.back();
        std::snprintf(buf, sizeof buf, "%.12e,%d,%.12e,%.12e\n", s.nodes[k], n, left, right);
        out += buf;
      }
    }
    return out;
  }

 private:
  static Point bp_point(const std::vector<Point>& bps, double v) {
    for (const auto& p : bps)
      if (p.value == v) return p;
    return Point::from_double(v);
  }

 public:
  static std::vector<double> fit_poly(const std::vector<double>& t, const std::vector<double>& v) {
    // Newton divided differences converted to monomial coefficients
    std::size_t n = t.size();
    std::vector<double> c = v;
    for (std::size_t j = 1; j < n; ++j)
      for (std::size_t i = n - 1; i >= j; --i) c[i] = (c[i] - c[i - 1]) / (t[i] - t[i - j]);
    std::vector<double> mono(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      // mono = mono * (x - t[i]) + c[i]
      std::vector<double> next(n, 0.0);
      for (std::size_t k = 0; k + 1 < n; ++k) next[k + 1] += mono[k];
      for (std::size_t k = 0; k < n; ++k) next[k] -= t[i] * mono[k];
      next[0] += c[i];
      mono.swap(next);
    }
    return mono;
  }
};

/// Integral of a grid piece over [s.a, x].
inline double segment_integral(const ConvSegment& s, double x) {
  if (x <= s.a) return 0.0;
  if (s.product) {
    double tx = x / s.b;
    double total = 0.0;
    for (std::size_t k = 0; k < s.g_coeffs.size(); ++k) {
      double e = s.gamma + static_cast<double>(k) + 1.0;
      // int_0^x y^gamma (y/b)^k dy = b^{-k} x^{e} / e
      total += s.g_coeffs[k] * std::pow(x, s.gamma + 1.0) * std::pow(tx, static_cast<double>(k)) / e;
    }
    return total;
  }
  int deg = static_cast<int>(s.nodes.size()) - 1;
  static thread_local std::vector<double> cc;
  static thread_local int cc_deg = -1;
  if (cc_deg != deg) {
    cc = clenshaw_curtis_weights(deg);
    cc_deg = deg;
  }
  if (x >= s.b) {
    double total = 0.0;
    for (int k = 0; k <= deg; ++k) total += cc[k] * s.values[k];
    return 0.5 * (s.b - s.a) * total;
  }
  auto sub = lobatto_nodes(deg, s.a, x);
  double total = 0.0;
  for (int k = 0; k <= deg; ++k) total += cc[k] * lobatto_interp(s.nodes, s.values, sub[k]);
  return 0.5 * (x - s.a) * total;
}

/// (1 * f)(x) = int_0^x f for a sampled grid.
inline double ind_conv(const ConvGrid& g, double x) {
  if (x < 0.0 || x > g.x_max * (1.0 + 1e-12)) throw DomainError("ind_conv: x outside grid coverage");
  double total = 0.0;
  for (const auto& s : g.segments) {
    if (x <= s.a) break;
    total += segment_integral(s, std::min(x, s.b));
  }
  return total;
}

}  // namespace subpot
