#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace subpot {

enum class Side { Left, Right };

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool near_integer(double x, double tol = 1e-12) {
  return std::fabs(x - std::round(x)) < tol;
}

/// 1/Gamma(x), zero at the poles 0, -1, -2, ...
inline double rgamma(double x) {
  if (x <= 0.0 && near_integer(x)) return 0.0;
  if (x > 0.0) return std::exp(-std::lgamma(x));
  return 1.0 / std::tgamma(x);
}

/// Riemann-Liouville kernel z^{nu-1}/Gamma(nu) for z > 0, zero for z <= 0.
inline double phi(double nu, double z) {
  if (z <= 0.0) return 0.0;
  double r = rgamma(nu);
  if (r == 0.0) return 0.0;
  if (nu > 0.0) return std::exp((nu - 1.0) * std::log(z) - std::lgamma(nu));
  return std::pow(z, nu - 1.0) * r;
}

/// T(mu, nu, b; z) = (Phi_mu * Phi_nu e^{-b.})(z) for integer mu >= 0.
///
/// Equals z^{mu+nu-1}/Gamma(mu+nu) e^{-bz} 1F1(mu; mu+nu; bz); the series
/// has positive terms and is summed in log space.
inline double tfun(int mu, double nu, double b, double z) {
  if (z <= 0.0) return 0.0;
  if (mu == 0) {
    if (b == 0.0) return phi(nu, z);
    return phi(nu, z) * std::exp(-b * z);
  }
  if (b == 0.0 || nu == 0.0) return phi(mu + nu, z);
  if (mu == 1) return std::pow(b, -nu) * boost::math::gamma_p(nu, b * z);
  double a = mu + nu;
  double lz = std::log(z);
  double bz = b * z;
  double logt = (a - 1.0) * lz - std::lgamma(a) - bz;
  double scale = logt;
  double acc = 1.0;
  double t_rel = 1.0;
  for (int k = 0; k < 100000; ++k) {
    double ratio = (mu + k) / (a + k) * bz / (k + 1.0);
    t_rel *= ratio;
    if (t_rel > 1e250) {
      double s = std::log(t_rel);
      scale += s;
      acc /= t_rel;
      t_rel = 1.0;
    }
    acc += t_rel;
    if (t_rel < 1e-17 * acc && k + 1 > bz) break;
  }
  return std::exp(scale + std::log(acc));
}

/// One-sided evaluation of tfun at z, where at_zero marks z == 0 exactly.
inline double tfun_side(int mu, double nu, double b, double z, Side side, bool at_zero) {
  if (!at_zero) return tfun(mu, nu, b, z);
  if (side == Side::Left) return 0.0;
  double e = mu + nu - 1.0;
  if (std::fabs(e) < 1e-12) return mu == 0 && nu == 0.0 ? 0.0 : 1.0;
  if (e > 0.0) return 0.0;
  if (mu == 0 && rgamma(nu) == 0.0) return 0.0;
  return kInf;
}

/// Gauss-Legendre rule on [-1, 1].
struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline QuadRule make_gauss_legendre(int n) {
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

template <int N>
const QuadRule& gauss_legendre() {
  static const QuadRule rule = make_gauss_legendre(N);
  return rule;
}

/// Chebyshev-Lobatto nodes cos(pi k/n) mapped to [a, b] in increasing order.
inline std::vector<double> lobatto_nodes(int n, double a, double b) {
  std::vector<double> t(n + 1);
  for (int k = 0; k <= n; ++k) {
    double c = -std::cos(kPi * k / n);
    t[k] = 0.5 * (a + b) + 0.5 * (b - a) * c;
  }
  t[0] = a;
  t[n] = b;
  return t;
}

/// Clenshaw-Curtis weights on [-1, 1] matching lobatto_nodes ordering.
inline std::vector<double> clenshaw_curtis_weights(int n) {
  std::vector<double> w(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double theta = kPi * k / n;
    double s = 0.0;
    for (int j = 1; j <= n / 2; ++j) {
      double bj = (2 * j == n) ? 1.0 : 2.0;
      s += bj / (4.0 * j * j - 1.0) * std::cos(2.0 * j * theta);
    }
    double ck = (k == 0 || k == n) ? 1.0 : 2.0;
    w[k] = ck / n * (1.0 - s);
  }
  return w;
}

/// Barycentric interpolation on Chebyshev-Lobatto nodes.
inline double lobatto_interp(const std::vector<double>& nodes, const std::vector<double>& vals, double x) {
  int n = static_cast<int>(nodes.size()) - 1;
  double num = 0.0, den = 0.0;
  for (int k = 0; k <= n; ++k) {
    double d = x - nodes[k];
    if (d == 0.0) return vals[k];
    double w = (k % 2 == 0 ? 1.0 : -1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
    num += w / d * vals[k];
    den += w / d;
  }
  return num / den;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r > 1e15 ? r : std::round(r);
}

}  // namespace subpot
