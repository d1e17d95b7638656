#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "subpot/error.hpp"
#include "subpot/levy_core.hpp"
#include "subpot/parallel.hpp"
#include "subpot/philox.hpp"

namespace subpot {

struct PathOutcome {
  double T_x = 0.0;
  double overshoot = 0.0;
  bool crept = false;
  bool killed = false;
};

struct CreepEstimate {
  double x = 0.0;
  double q = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t successes = 0;
  double p_hat = 0.0;
  double ci95 = 0.0;
  double truncation_eps = 0.0;
  std::uint64_t seed = 0;
  double bias_bound = 0.0;

  double sigma() const { return ci95 / 1.96; }
};

/// Jump law of the model with jumps below eps removed.
class JumpSampler {
 public:
  JumpSampler(const LevyModel& m, double eps) : eps_(eps), ac_(m.ac()) {
    if (eps < 0.0) throw DomainError("truncation eps must be nonnegative");
    if (ac_.present() && eps == 0.0)
      throw PreconditionError("eps-required", "infinite activity needs a positive truncation eps");
    for (const auto& a : m.atoms()) {
      if (a.loc.value < eps) continue;
      loc_.push_back(a.loc.value);
      cum_.push_back((cum_.empty() ? 0.0 : cum_.back()) + a.mass);
    }
    atom_rate_ = cum_.empty() ? 0.0 : cum_.back();
    ac_rate_ = ac_.present() ? ac_.tail(eps) : 0.0;
    rate_ = atom_rate_ + ac_rate_;
  }

  double rate() const { return rate_; }

  double sample(PhiloxStream& rng) const {
    double u = rng.uniform() * rate_;
    if (u < atom_rate_) {
      auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
      std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), loc_.size() - 1);
      return loc_[i];
    }
    return sample_ac(rng);
  }

 private:
  // The normalised tail (y/eps)^{-alpha} e^{-b(y - eps)} is the survival
  // function of min(Pareto, eps + Exp(b)).
  double sample_ac(PhiloxStream& rng) const {
    double y = eps_ * std::pow(rng.uniform(), -1.0 / ac_.alpha);
    if (ac_.kind == AcKind::Tempered) y = std::min(y, eps_ - std::log(rng.uniform()) / ac_.b);
    return y;
  }

  double eps_;
  AcTail ac_;
  std::vector<double> loc_, cum_;
  double atom_rate_ = 0.0, ac_rate_ = 0.0, rate_ = 0.0;
};

/// One path up to first passage over x. Creeping is decided by comparing the
/// drift time to x against the next jump time.
inline PathOutcome first_passage(double drift, const JumpSampler& js, double x, PhiloxStream& rng) {
  if (!(x > 0.0)) throw DomainError("first passage level must be positive");
  PathOutcome o;
  double pos = 0.0, t = 0.0;
  double rate = js.rate();
  while (true) {
    double need = (x - pos) / drift;
    double wait = rate > 0.0 ? -std::log(rng.uniform()) / rate : kInf;
    if (need <= wait) {
      o.crept = true;
      o.T_x = t + need;
      return o;
    }
    t += wait;
    pos += drift * wait;
    pos += js.sample(rng);
    if (pos > x) {
      o.T_x = t;
      o.overshoot = pos - x;
      return o;
    }
  }
}

inline PathOutcome first_passage(const LevyModel& m, double x, PhiloxStream& rng, double eps) {
  JumpSampler js(m, eps);
  return first_passage(m.drift(), js, x, rng);
}

namespace detail {

inline CreepEstimate creep_run(const LevyModel& m, double q, double x, std::uint64_t n_paths, std::uint64_t seed,
                               double eps, int threads) {
  if (n_paths < 1) throw DomainError("n_paths must be at least 1");
  if (!(x > 0.0)) throw DomainError("x must be positive");
  JumpSampler js(m, eps);
  std::size_t chunks = 64;
  std::uint64_t per = (n_paths + chunks - 1) / chunks;
  auto counts = parallel_map<std::uint64_t>(
      chunks,
      [&](std::size_t c) {
        std::uint64_t lo = c * per, hi = std::min<std::uint64_t>(n_paths, lo + per), ok = 0;
        for (std::uint64_t p = lo; p < hi; ++p) {
          PhiloxStream jumps(seed, p, 0);
          auto o = first_passage(m.drift(), js, x, jumps);
          if (!o.crept) continue;
          if (q > 0.0) {
            PhiloxStream clock(seed, p, 1);
            double e_q = -std::log(clock.uniform()) / q;
            if (o.T_x > e_q) continue;
          }
          ++ok;
        }
        return ok;
      },
      threads);
  CreepEstimate e;
  e.x = x;
  e.q = q;
  e.n_paths = n_paths;
  for (auto c : counts) e.successes += c;
  e.p_hat = static_cast<double>(e.successes) / static_cast<double>(n_paths);
  e.ci95 = 1.96 * std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n_paths));
  e.truncation_eps = eps;
  e.seed = seed;
  if (eps > 0.0) {
    double dropped = m.ac().present() ? m.ac().tail(eps) : 0.0;
    for (const auto& a : m.atoms())
      if (a.loc.value < eps) dropped += a.mass;
    e.bias_bound = eps * std::max(dropped, m.tail(eps, Side::Left).value) * std::max(1.0, x / m.drift());
  }
  return e;
}

}  // namespace detail

/// P[X_{T_x} = x] = drift u(x).
inline CreepEstimate creep_prob(const LevyModel& m, double x, std::uint64_t n_paths, std::uint64_t seed,
                                double eps = 0.0, int threads = 0) {
  return detail::creep_run(m, 0.0, x, n_paths, seed, eps, threads);
}

/// P[X_{T_x} = x, T_x <= e_q] = drift u^(q)(x).
inline CreepEstimate creep_prob_killed(const LevyModel& m, double q, double x, std::uint64_t n_paths,
                                       std::uint64_t seed, double eps = 0.0, int threads = 0) {
  if (!(q > 0.0)) throw DomainError("killing rate must be positive");
  return detail::creep_run(m, q, x, n_paths, seed, eps, threads);
}

}  // namespace subpot
