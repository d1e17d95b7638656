#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subpot/error.hpp"
#include "subpot/rational.hpp"
#include "subpot/special.hpp"

namespace subpot {

struct Atom {
  Point loc;
  double mass = 0.0;
};

enum class AcKind { None, Stable, Tempered };

/// Absolutely continuous tail C y^{-alpha} (Stable) or C y^{-alpha} e^{-b y} (Tempered).
struct AcTail {
  AcKind kind = AcKind::None;
  double C = 0.0;
  double alpha = 0.0;
  double b = 0.0;

  bool present() const { return kind != AcKind::None; }
  double beta() const { return 1.0 - alpha; }
  double rate() const { return kind == AcKind::Tempered ? b : 0.0; }
  /// Coefficient of Phi_beta(y) e^{-by} in the tail.
  double kappa() const { return present() ? C * std::tgamma(1.0 - alpha) : 0.0; }

  double tail(double y) const {
    if (!present() || y <= 0.0) return 0.0;
    double v = C * std::pow(y, -alpha);
    return kind == AcKind::Tempered ? v * std::exp(-b * y) : v;
  }
};

/// Countable family with locations 1/j and masses m_j, truncated at cap.
struct AtomFamily {
  std::string kind = "reciprocal-integers";
  std::vector<double> masses;
  int cap = 64;
};

struct ModelSpec {
  double drift = 1.0;
  double q = 0.0;
  std::vector<Atom> atoms;
  std::optional<AtomFamily> family;
  AcTail ac;
};

struct Violation {
  std::string pointer;
  std::string invariant;
};

inline std::vector<Violation> validate(const ModelSpec& s) {
  std::vector<Violation> out;
  if (!(s.drift > 0.0) || !std::isfinite(s.drift)) out.push_back({"/drift", "drift > 0"});
  if (!(s.q >= 0.0) || !std::isfinite(s.q)) out.push_back({"/q", "q >= 0"});
  for (std::size_t i = 0; i < s.atoms.size(); ++i) {
    std::string p = "/atoms/" + std::to_string(i);
    if (!(s.atoms[i].loc.value > 0.0) || !std::isfinite(s.atoms[i].loc.value))
      out.push_back({p + "/x", "atom location > 0"});
    if (!(s.atoms[i].mass > 0.0) || !std::isfinite(s.atoms[i].mass))
      out.push_back({p + "/mass", "atom mass > 0"});
    if (i > 0 && !(s.atoms[i].loc.value > s.atoms[i - 1].loc.value))
      out.push_back({p + "/x", "atom locations strictly increasing"});
  }
  if (s.family) {
    const auto& f = *s.family;
    if (f.kind != "reciprocal-integers")
      out.push_back({"/atom_family/kind", "atom_family.kind == reciprocal-integers"});
    if (f.cap < 1) out.push_back({"/atom_family/cap", "atom_family.cap >= 1"});
    if (f.masses.empty()) out.push_back({"/atom_family/masses", "atom_family.masses non-empty"});
    for (std::size_t j = 0; j < f.masses.size(); ++j)
      if (!(f.masses[j] > 0.0) || !std::isfinite(f.masses[j]))
        out.push_back({"/atom_family/masses/" + std::to_string(j), "atom mass > 0"});
  }
  if (s.ac.kind != AcKind::None) {
    if (!(s.ac.C > 0.0)) out.push_back({"/ac/C", "C > 0"});
    if (!(s.ac.alpha > 0.0 && s.ac.alpha < 1.0)) out.push_back({"/ac/alpha", "alpha in (0,1)"});
    if (s.ac.kind == AcKind::Tempered && !(s.ac.b > 0.0)) out.push_back({"/ac/b", "b > 0"});
  }
  return out;
}

/// Log-log slope of m_j against j over the trailing part of the mass list.
inline double family_slope(const std::vector<double>& m, std::size_t from) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (std::size_t j = from; j < m.size(); ++j) {
    double x = std::log(static_cast<double>(j + 1));
    double y = std::log(m[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct TailValue {
  double value = 0.0;
  bool unbounded = false;
};

struct MeanValue {
  double value = 0.0;
  bool infinite = false;
};

class LevyModel {
 public:
  explicit LevyModel(ModelSpec spec) : spec_(std::move(spec)) {
    auto v = validate(spec_);
    if (spec_.family && v.empty()) check_family(v);
    if (!v.empty()) {
      std::string msg;
      for (const auto& e : v) msg += (msg.empty() ? "" : "; ") + e.pointer + ": " + e.invariant;
      throw ValidationError("invalid-model", msg);
    }
    atoms_ = spec_.atoms;
    if (spec_.family) {
      const auto& f = *spec_.family;
      std::size_t J = std::min<std::size_t>(f.masses.size(), static_cast<std::size_t>(f.cap));
      for (std::size_t j = 1; j <= J; ++j)
        atoms_.push_back({Point::from_rational(Rational{1, static_cast<std::int64_t>(j)}), f.masses[j - 1]});
      for (std::size_t j = J; j < f.masses.size(); ++j) truncation_mass_ += f.masses[j];
      std::sort(atoms_.begin(), atoms_.end(),
                [](const Atom& a, const Atom& b) { return a.loc.value < b.loc.value; });
      for (std::size_t i = 1; i < atoms_.size(); ++i)
        if (!(atoms_[i].loc.value > atoms_[i - 1].loc.value))
          throw ValidationError("invalid-model", "/atom_family: atom locations strictly increasing");
    }
    exact_ = true;
    prefix_m_.assign(atoms_.size() + 1, 0.0);
    prefix_am_.assign(atoms_.size() + 1, 0.0);
    prefix_aam_.assign(atoms_.size() + 1, 0.0);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!atoms_[i].loc.exact) exact_ = false;
      double a = atoms_[i].loc.value, m = atoms_[i].mass;
      prefix_m_[i + 1] = prefix_m_[i] + m;
      prefix_am_[i + 1] = prefix_am_[i] + a * m;
      prefix_aam_[i + 1] = prefix_aam_[i] + a * a * m;
    }
    hash_ = compute_hash();
  }

  double drift() const { return spec_.drift; }
  double q() const { return spec_.q; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const AcTail& ac() const { return spec_.ac; }
  const ModelSpec& spec() const { return spec_; }
  bool exact_atoms() const { return exact_; }
  double total_atom_mass() const { return prefix_m_.back(); }
  double truncation_mass() const { return truncation_mass_; }
  std::uint64_t hash() const { return hash_; }
  bool purely_atomic() const { return !spec_.ac.present(); }
  double max_atom() const { return atoms_.empty() ? 0.0 : atoms_.back().loc.value; }
  double min_atom() const { return atoms_.empty() ? 0.0 : atoms_.front().loc.value; }

  /// Pi(R) finite, i.e. no AC part.
  bool finite_measure() const { return !spec_.ac.present(); }

  /// Index of the atom located at x, if any.
  std::optional<std::size_t> atom_index(const Point& x) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x.value - 1e-12 * std::fabs(x.value),
                               [](const Atom& a, double v) { return a.loc.value < v; });
    for (; it != atoms_.end() && it->loc.value <= x.value + 1e-12 * std::fabs(x.value); ++it) {
      if (x.exact && it->loc.exact) {
        if (*x.exact == *it->loc.exact) return static_cast<std::size_t>(it - atoms_.begin());
      } else {
        return static_cast<std::size_t>(it - atoms_.begin());
      }
    }
    return std::nullopt;
  }

  double atom_mass_at(const Point& x) const {
    auto i = atom_index(x);
    return i ? atoms_[*i].mass : 0.0;
  }

  /// Pi-bar(y) = Pi([y, inf)) for Left, Pi((y, inf)) for Right; zero for y <= 0
  /// except the Right value at 0, which is Pi-bar(0+).
  TailValue tail(const Point& y, Side side) const {
    if (y.value < 0.0) return {};
    if (y.value == 0.0) {
      if (side == Side::Left) return {};
      if (spec_.ac.present()) return {kInf, true};
      return {total_atom_mass(), false};
    }
    std::size_t first = first_atom_at_or_above(y.value);
    double s = total_atom_mass() - prefix_m_[first];
    if (auto at = atom_index(y)) {
      if (side == Side::Right && *at >= first) s -= atoms_[*at].mass;
      if (side == Side::Left && *at < first) s += atoms_[*at].mass;
    }
    return {std::max(0.0, s) + spec_.ac.tail(y.value), false};
  }
  TailValue tail(double y, Side side) const { return tail(Point::from_double(y), side); }

  /// Left tail with plain floating comparison against atom locations.
  double tail_plain(double y) const {
    if (y <= 0.0) return 0.0;
    return total_atom_mass() - prefix_m_[first_atom_at_or_above(y)] + spec_.ac.tail(y);
  }

  /// Primitives K0(y) = int_0^y (Pi-bar + q), K1(y) = int_0^y t (Pi-bar + q) dt.
  std::pair<double, double> kernel_primitives(double y) const {
    if (y <= 0.0) return {0.0, 0.0};
    double q = spec_.q;
    double k0 = q * y, k1 = 0.5 * q * y * y;
    std::size_t first = first_atom_at_or_above(y);
    double mass_above = total_atom_mass() - prefix_m_[first];
    k0 += prefix_am_[first] + y * mass_above;
    k1 += 0.5 * prefix_aam_[first] + 0.5 * y * y * mass_above;
    const auto& ac = spec_.ac;
    if (ac.kind == AcKind::Stable) {
      double beta = ac.beta();
      double yb = std::pow(y, beta);
      k0 += ac.C * yb / beta;
      k1 += ac.C * yb * y / (1.0 + beta);
    } else if (ac.kind == AcKind::Tempered) {
      double beta = ac.beta();
      k0 += ac.kappa() * tfun(1, beta, ac.b, y);
      k1 += ac.C * std::tgamma(1.0 + beta) * tfun(1, 1.0 + beta, ac.b, y);
    }
    return {k0, k1};
  }

  /// Blumenthal-Getoor index of Pi.
  double bg_index() const {
    double idx = 0.0;
    if (spec_.family) idx = std::max(idx, family_index());
    if (spec_.ac.present()) idx = std::max(idx, spec_.ac.alpha);
    return idx;
  }

  /// psi(lambda) for lambda >= 0.
  double laplace_exponent(double lam) const {
    if (lam < 0.0) throw DomainError("laplace_exponent requires lambda >= 0");
    if (lam == 0.0) return 0.0;
    double s = spec_.drift * lam;
    for (const auto& a : atoms_) s += a.mass * -std::expm1(-lam * a.loc.value);
    const auto& ac = spec_.ac;
    if (ac.present()) s += lam * ac.kappa() * std::pow(lam + ac.rate(), -ac.beta());
    return s;
  }

  MeanValue mean() const {
    if (spec_.ac.kind == AcKind::Stable) return {kInf, true};
    double m = spec_.drift + prefix_am_.back();
    if (spec_.ac.kind == AcKind::Tempered) m += spec_.ac.kappa() * std::pow(spec_.ac.b, -spec_.ac.beta());
    return {m, false};
  }

  /// Integral of Pi-bar over (0, inf); finite iff the mean is.
  double tail_integral() const { return mean().value - spec_.drift; }

 private:
  std::size_t first_atom_at_or_above(double y) const {
    return static_cast<std::size_t>(
        std::lower_bound(atoms_.begin(), atoms_.end(), y,
                         [](const Atom& a, double v) { return a.loc.value < v; }) -
        atoms_.begin());
  }

  void check_family(std::vector<Violation>& v) const {
    const auto& m = spec_.family->masses;
    if (m.size() >= 8 && family_slope(m, m.size() / 2) >= 0.0)
      v.push_back({"/atom_family/masses", "sum of (1 ^ location) * mass converges"});
  }

  double family_index() const {
    const auto& m = spec_.family->masses;
    if (m.size() < 8)
      throw PreconditionError("indeterminate-index",
                              "atom family needs at least 8 masses to test convergence of sum a_j^g m_j");
    double p_half = family_slope(m, m.size() / 2);
    double p_quarter = family_slope(m, m.size() - m.size() / 4);
    if (std::fabs(p_half - p_quarter) > 0.1)
      throw PreconditionError("indeterminate-index", "convergence test of sum a_j^g m_j does not stabilize within the cap");
    double lo = 0.0, hi = 1.0;
    auto converges = [&](double g) { return p_half - g < -1.0; };
    if (converges(0.0)) return 0.0;
    while (hi - lo > 1e-6) {
      double mid = 0.5 * (lo + hi);
      (converges(mid) ? hi : lo) = mid;
    }
    return hi;
  }

  std::uint64_t compute_hash() const {
    std::string s;
    char buf[64];
    auto put = [&](double x) {
      std::snprintf(buf, sizeof buf, "%.17g;", x);
      s += buf;
    };
    put(spec_.drift);
    put(spec_.q);
    for (const auto& a : atoms_) {
      put(a.loc.value);
      put(a.mass);
    }
    s += std::to_string(static_cast<int>(spec_.ac.kind));
    put(spec_.ac.C);
    put(spec_.ac.alpha);
    put(spec_.ac.b);
    if (spec_.family) s += "cap" + std::to_string(spec_.family->cap);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  ModelSpec spec_;
  std::vector<Atom> atoms_;
  std::vector<double> prefix_m_, prefix_am_, prefix_aam_;
  double truncation_mass_ = 0.0;
  bool exact_ = true;
  std::uint64_t hash_ = 0;
};

}  // namespace subpot
