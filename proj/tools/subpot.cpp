#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subpot/subpot.hpp"

using namespace subpot;

namespace {

struct Common {
  std::string model;
  std::string out = "-";
  std::string format = "csv";
  int threads = 0;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return 2;
    case ErrorKind::Accuracy:
    case ErrorKind::Budget: return 3;
    case ErrorKind::Precondition:
    case ErrorKind::Domain: return 4;
  }
  return 1;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::Budget: return "budget";
  }
  return "unknown";
}

int report(const Error& e) {
  json j = {{"error", e.code()}, {"kind", kind_name(e.kind())}, {"message", e.what()}};
  if (auto* a = dynamic_cast<const AccuracyError*>(&e)) j["achieved"] = a->achieved();
  if (auto* m = dynamic_cast<const ModelError*>(&e)) {
    j["violations"] = json::array();
    for (const auto& v : m->violations()) j["violations"].push_back({{"pointer", v.pointer}, {"invariant", v.invariant}});
  }
  std::cerr << j.dump() << "\n";
  return exit_code(e.kind());
}

/// Points from "min:max:steps[:geom]" or a comma list.
std::vector<Point> parse_xs(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  char sep = text.find(':') != std::string::npos ? ':' : ',';
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  std::vector<Point> xs;
  if (sep == ',') {
    for (const auto& p : parts) xs.push_back(parse_point(p));
    return xs;
  }
  if (parts.size() < 3 || parts.size() > 4) throw ValidationError("x-range", "x range is min:max:steps[:geom]");
  Point a = parse_point(parts[0]), b = parse_point(parts[1]);
  int n = 0;
  try {
    n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw ValidationError("x-range", "steps is an integer");
  }
  bool geom = parts.size() == 4 && (parts[3] == "geom" || parts[3] == "geometric");
  if (parts.size() == 4 && !geom && parts[3] != "lin" && parts[3] != "linear")
    throw ValidationError("x-range", "spacing is lin or geom");
  if (n < 2) throw ValidationError("x-range", "steps >= 2");
  if (!(b.value > a.value)) throw ValidationError("x-range", "max > min");
  if (geom && !(a.value > 0.0)) throw ValidationError("x-range", "x_min > 0 for geometric spacing");
  for (int i = 0; i < n; ++i) {
    if (geom) {
      double v = a.value * std::pow(b.value / a.value, static_cast<double>(i) / (n - 1));
      xs.push_back(Point::from_double(i == 0 ? a.value : i == n - 1 ? b.value : v));
      continue;
    }
    if (a.exact && b.exact) {
      __int128 p1 = a.exact->num, q1 = a.exact->den, p2 = b.exact->num, q2 = b.exact->den;
      auto r = make_rational(p1 * q2 * (n - 1) + (p2 * q1 - p1 * q2) * i, q1 * q2 * (n - 1));
      if (r) {
        xs.push_back(Point::from_rational(*r));
        continue;
      }
    }
    xs.push_back(Point::from_double(a.value + (b.value - a.value) * i / (n - 1)));
  }
  return xs;
}

json cell_json(const std::string& s) {
  if (s == "nan") return nullptr;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (!s.empty() && end == s.c_str() + s.size() && std::isfinite(v)) return v;
  return s;
}

void emit(const Common& c, const CsvTable& t) {
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& r : t.rows()) {
      json o = json::object();
      for (std::size_t i = 0; i < r.size(); ++i) o[t.header()[i]] = cell_json(r[i]);
      rows.push_back(o);
    }
    atomic_write(c.out, rows.dump(2) + "\n");
  } else {
    atomic_write(c.out, t.str());
  }
}

std::string point_str(const Point& p) { return fmt_num(p.value); }

InversionOptions inv_opts(int order, double lambda, double theta_cut, double tol) {
  InversionOptions o;
  o.N = order;
  o.lambda = lambda;
  o.theta_cut = theta_cut;
  o.tol = tol;
  return o;
}

struct Du {
  double left = 0.0, right = 0.0, err = 0.0;
};

Du du_sided(const LevyModel& m, const Point& x, const InversionOptions& opt) {
  auto s = detail::sided_inversion(m, x, 1, opt);
  return {s.left, s.right, s.err};
}

// ---------------------------------------------------------------------------

int run_eval(const Common& c, const std::string& xspec, const std::string& method, double tol,
             const InversionOptions& iopt) {
  auto m = load_model(c.model);
  auto xs = parse_xs(xspec);
  double x_max = 0.0;
  for (const auto& p : xs) {
    if (!(p.value > 0.0)) throw DomainError("eval needs x > 0");
    x_max = std::max(x_max, p.value);
  }
  double radius = series_radius(m);
  if (method == "series" && x_max > radius)
    throw PreconditionError("out-of-radius", "grid extends beyond the series radius " + fmt_num(radius));
  std::optional<SeriesEvaluator> se;
  std::optional<VolterraSolution> vs;
  double series_top = 0.0;
  for (const auto& p : xs)
    if (p.value <= radius) series_top = std::max(series_top, p.value);
  if ((method == "auto" || method == "series") && series_top > 0.0) se.emplace(m, series_top, std::min(tol, 1e-10));
  if ((method == "auto" && x_max > radius) || method == "volterra") {
    VolterraOptions vo;
    vo.tol = tol;
    vs.emplace(u_volterra(m, x_max, vo));
  }
  CsvTable t({"x", "u", "du_left", "du_right", "err_est", "method"});
  for (const auto& p : xs) {
    double u = 0.0, err = 0.0;
    Du d;
    Method how = Method::Inversion;
    if (method == "inversion") {
      auto r = u_inversion(m, p, iopt);
      u = r.value;
      err = r.err_est;
      d = du_sided(m, p, iopt);
    } else if (se && p.value <= radius && method != "volterra") {
      how = Method::Series;
      auto r = se->u(p);
      auto l = se->du(p, Side::Left), rr = se->du(p, Side::Right);
      u = r.value;
      err = r.err_bound;
      d = {l.value, rr.value, std::max(l.err_bound, rr.err_bound)};
    } else {
      how = Method::Volterra;
      auto [v, e] = vs->eval(p.value);
      u = v;
      err = e;
      try {
        d = du_sided(m, p, iopt);
      } catch (const Error&) {
        auto l = one_sided_fd(*vs, p.value, 1, Side::Left);
        auto r = one_sided_fd(*vs, p.value, 1, Side::Right);
        d = {l.estimate, r.estimate, std::max(l.stderr_, r.stderr_)};
      }
    }
    t.add({point_str(p), fmt_num(u), fmt_num(d.left), fmt_num(d.right), fmt_num(std::max(err, d.err)),
           to_string(how)});
  }
  emit(c, t);
  return 0;
}

int run_invert(const Common& c, const std::string& xspec, const InversionOptions& iopt, int deriv,
               const std::string& side) {
  auto m = load_model(c.model);
  auto xs = parse_xs(xspec);
  Side s = side == "left" ? Side::Left : Side::Right;
  CsvTable t({"x", "value", "err_est", "finite_sum", "integral", "N", "lambda", "theta_cut", "panels",
              "hermitian_residual", "method"});
  for (const auto& p : xs) {
    auto r = deriv == 0 ? u_inversion(m, p, iopt) : dk_inversion(m, p, deriv, s, iopt);
    if (!(r.err_est <= iopt.tol * 10.0))
      throw AccuracyError("tolerance", "inversion error estimate above tolerance at x = " + fmt_num(p.value),
                          r.err_est);
    t.add({point_str(p), fmt_num(r.value), fmt_num(r.err_est), fmt_num(r.finite_sum), fmt_num(r.integral),
           std::to_string(r.contour.N), fmt_num(r.contour.lambda), fmt_num(r.contour.theta_cut),
           std::to_string(r.panels), fmt_num(r.hermitian_residual), "inversion"});
  }
  emit(c, t);
  return 0;
}

int run_smoothness(const Common& c, const std::string& xspec, int k_max, const InversionOptions& iopt) {
  auto m = load_model(c.model);
  auto xs = parse_xs(xspec);
  SmoothnessOptions so;
  so.k_max = k_max;
  so.inversion = iopt;
  CsvTable t({"x", "min_k", "order", "differentiable", "predicted", "measured", "stderr", "present", "method"});
  for (const auto& p : xs) {
    auto rep = classify_point(m, p, so);
    for (std::size_t i = 0; i < rep.jumps.size(); ++i) {
      const auto& j = rep.jumps[i];
      t.add({point_str(p), rep.min_k ? std::to_string(*rep.min_k) : "none", std::to_string(j.order),
             rep.verdicts[i].differentiable ? "true" : "false", fmt_num(j.predicted), fmt_num(j.measured),
             fmt_num(j.stderr_), j.present ? "true" : "false", "inversion"});
    }
  }
  emit(c, t);
  return 0;
}

int run_gk(const Common& c, int k, double x_max) {
  auto m = load_model(c.model);
  auto g = atom_sums(m, k, x_max);
  CsvTable t({"value", "exact", "min_jumps", "representations"});
  for (const auto& e : g.elements)
    t.add({fmt_num(e.value.value), e.value.exact ? to_string(*e.value.exact) : "",
           std::to_string(e.min_jumps), fmt_num(e.representation_count)});
  emit(c, t);
  return 0;
}

int run_asymptotics(const Common& c, const std::string& law, int n, bool strict, const InversionOptions& iopt) {
  auto m = load_model(c.model);
  std::vector<std::string> laws;
  if (law == "all")
    laws = {"zero-series", "linear-zero", "du-zero", "du-infinity", "limit-zero", "limit-infinity"};
  else
    laws = {law};
  CsvTable t({"law", "x", "lhs", "rhs", "ratio", "pass", "note"});
  bool ok = true;
  for (const auto& l : laws) {
    AsymptoticCheck a;
    if (l == "zero-series")
      a = check_zero_series(m, n);
    else if (l == "linear-zero")
      a = check_linear_zero(m);
    else if (l == "du-zero")
      a = check_du_zero(m, {}, iopt);
    else if (l == "du-infinity")
      a = check_du_infinity(m, {}, iopt);
    else if (l == "limit-zero")
      a = check_limit_zero(m);
    else if (l == "limit-infinity")
      a = check_limit_infinity(m);
    else
      throw ValidationError("law", "unknown law " + l);
    ok = ok && a.pass;
    for (std::size_t i = 0; i < a.x.size(); ++i)
      t.add({a.law, fmt_num(a.x[i]), fmt_num(a.lhs[i]), fmt_num(a.rhs[i]), fmt_num(a.ratio[i]),
             a.pass ? "true" : "false", a.note});
  }
  emit(c, t);
  if (strict && !ok) {
    std::cerr << json{{"error", "asymptotic-check"}, {"kind", "accuracy"}, {"message", "an asymptotic check failed"}}
                     .dump()
              << "\n";
    return 3;
  }
  return 0;
}

int run_simulate(const Common& c, const std::string& xspec, std::uint64_t paths, std::uint64_t seed, double eps,
                 double q) {
  auto m = load_model(c.model);
  auto xs = parse_xs(xspec);
  if (q < 0.0) throw ValidationError("q", "q >= 0");
  CsvTable t({"x", "q", "p_hat", "ci95", "n_paths", "eps", "seed"});
  for (const auto& p : xs) {
    auto e = q > 0.0 ? creep_prob_killed(m, q, p.value, paths, seed, eps, c.threads)
                     : creep_prob(m, p.value, paths, seed, eps, c.threads);
    t.add({point_str(p), fmt_num(e.q), fmt_num(e.p_hat), fmt_num(e.ci95), std::to_string(e.n_paths),
           fmt_num(e.truncation_eps), std::to_string(e.seed)});
  }
  emit(c, t);
  return 0;
}

int run_crosscheck(const Common& c, const std::string& lams, double tail_tol, double tol) {
  auto m = load_model(c.model);
  CsvTable t({"lambda", "lhs", "rhs", "diff", "tail_bound", "quad_err", "x_max"});
  VolterraOptions vo;
  vo.tol = tol;
  for (const auto& p : parse_xs(lams)) {
    auto r = laplace_crosscheck(m, p.value, tail_tol, vo);
    t.add({fmt_num(p.value), fmt_num(r.lhs), fmt_num(r.rhs), fmt_num(r.abs_diff), fmt_num(r.tail_bound),
           fmt_num(r.quad_err), fmt_num(r.x_max)});
  }
  emit(c, t);
  return 0;
}

int run_validate(const Common& c) {
  auto m = load_model(c.model);
  json j = {{"valid", true}, {"model", model_to_json(m)}, {"hash", m.hash()}};
  atomic_write(c.out, j.dump(2) + "\n");
  return 0;
}

int run_conv(const Common& c, int n, double x_max, int degree) {
  auto m = load_model(c.model);
  ConvAlgebra alg(m, x_max, n);
  atomic_write(c.out, ConvGrid::build(alg, n, x_max, degree).to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-potential densities of drift-positive subordinators"};
  app.require_subcommand(1);
  Common c;
  auto common = [&](CLI::App* s, bool table = true) {
    s->add_option("--model", c.model, "model JSON file")->required();
    s->add_option("--out", c.out, "output path, - for stdout");
    if (table) s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--threads", c.threads, "worker threads (also SUBPOT_THREADS)")->check(CLI::NonNegativeNumber);
  };
  int order = 0;
  double lambda = std::nan(""), theta_cut = std::nan(""), tol = 1e-8;
  auto inversion_flags = [&](CLI::App* s) {
    s->add_option("--order", order, "series order N of the inversion (0 = automatic)")->check(CLI::NonNegativeNumber);
    s->add_option("--contour-lambda", lambda, "contour abscissa");
    s->add_option("--theta-cut", theta_cut, "contour truncation");
    s->add_option("--tol", tol, "target accuracy")->check(CLI::PositiveNumber);
  };
  std::string xspec;

  auto* eval = app.add_subcommand("eval", "u, u'(x-) and u'(x+) on a grid");
  common(eval);
  inversion_flags(eval);
  std::string method = "auto";
  eval->add_option("--x", xspec, "min:max:steps[:geom] or a comma list")->required();
  eval->add_option("--method", method)->check(CLI::IsMember({"auto", "series", "volterra", "inversion"}));

  auto* invert = app.add_subcommand("invert", "Bromwich inversion with diagnostics");
  common(invert);
  inversion_flags(invert);
  int deriv = 0;
  std::string side = "right";
  invert->add_option("--x", xspec)->required();
  invert->add_option("--deriv", deriv, "derivative order")->check(CLI::NonNegativeNumber);
  invert->add_option("--side", side)->check(CLI::IsMember({"left", "right"}));

  auto* smooth = app.add_subcommand("smoothness", "differentiability verdicts and measured jumps");
  common(smooth);
  inversion_flags(smooth);
  int k_max = 4;
  smooth->add_option("--x", xspec)->required();
  smooth->add_option("--kmax", k_max)->check(CLI::PositiveNumber);

  auto* gk = app.add_subcommand("gk", "sums of at most k atoms");
  common(gk);
  int k = 1;
  double x_max = 10.0;
  gk->add_option("--k", k)->required()->check(CLI::PositiveNumber);
  gk->add_option("--xmax", x_max)->required()->check(CLI::PositiveNumber);

  auto* asym = app.add_subcommand("asymptotics", "asymptotic laws at 0 and infinity");
  common(asym);
  inversion_flags(asym);
  std::string law = "all";
  int n_terms = 1;
  bool strict = false;
  asym->add_option("--law", law)->check(CLI::IsMember(
      {"all", "zero-series", "linear-zero", "du-zero", "du-infinity", "limit-zero", "limit-infinity"}));
  asym->add_option("--n", n_terms, "series terms kept for zero-series")->check(CLI::NonNegativeNumber);
  asym->add_flag("--strict", strict, "exit 3 when a check fails");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo creeping probabilities");
  common(sim);
  std::uint64_t paths = 100000, seed = 1;
  double eps = 0.0, q = 0.0;
  sim->add_option("--x", xspec)->required();
  sim->add_option("--paths", paths)->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed);
  sim->add_option("--eps", eps, "small-jump truncation")->check(CLI::NonNegativeNumber);
  sim->add_option("--q", q, "killing rate")->check(CLI::NonNegativeNumber);

  auto* cross = app.add_subcommand("crosscheck", "Laplace transform of u against 1/psi");
  common(cross);
  std::string lams;
  double tail_tol = 1e-9, vtol = 1e-7;
  cross->add_option("--lambda", lams, "comma list or range")->required();
  cross->add_option("--tail-tol", tail_tol)->check(CLI::PositiveNumber);
  cross->add_option("--tol", vtol, "Volterra tolerance")->check(CLI::PositiveNumber);

  auto* val = app.add_subcommand("validate", "validate a model file");
  common(val, false);

  auto* conv = app.add_subcommand("conv", "one-sided samples of (Pi-bar + q)^{*n}");
  common(conv, false);
  int n_conv = 1, degree = 16;
  conv->add_option("--n", n_conv)->required()->check(CLI::PositiveNumber);
  conv->add_option("--xmax", x_max)->check(CLI::PositiveNumber);
  conv->add_option("--degree", degree)->check(CLI::Range(2, 64));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "cli"}, {"kind", "validation"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  if (c.threads > 0) ::setenv("SUBPOT_THREADS", std::to_string(c.threads).c_str(), 1);
  auto iopt = inv_opts(order, lambda, theta_cut, tol);
  try {
    if (*eval) return run_eval(c, xspec, method, tol, iopt);
    if (*invert) return run_invert(c, xspec, iopt, deriv, side);
    if (*smooth) return run_smoothness(c, xspec, k_max, iopt);
    if (*gk) return run_gk(c, k, x_max);
    if (*asym) return run_asymptotics(c, law, n_terms, strict, iopt);
    if (*sim) return run_simulate(c, xspec, paths, seed, eps, q);
    if (*cross) return run_crosscheck(c, lams, tail_tol, vtol);
    if (*val) return run_validate(c);
    if (*conv) return run_conv(c, n_conv, x_max, degree);
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"kind", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 1;
}
