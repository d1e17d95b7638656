#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subpot/error.hpp"
#include "subpot/levy_core.hpp"
#include "subpot/rational.hpp"

namespace subpot {

using json = nlohmann::json;

/// Validation failure carrying every violated invariant.
class ModelError : public ValidationError {
 public:
  ModelError(std::vector<Violation> v, const std::string& what)
      : ValidationError("invalid-model", what), violations_(std::move(v)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Location text: "p/q", decimals and integers are exact; anything else is a plain double.
inline Point parse_point(const std::string& text) {
  if (auto r = parse_rational(text)) return Point::from_rational(*r);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("parse", "not a number: " + text);
  }
  if (used != text.size()) throw ValidationError("parse", "not a number: " + text);
  return Point::from_double(v);
}

namespace detail {

inline Point json_point(const json& j, const std::string& ptr, std::vector<Violation>& bad) {
  if (j.is_string()) {
    if (auto r = parse_rational(j.get<std::string>())) return Point::from_rational(*r);
    bad.push_back({ptr, "location is a number or an exact rational string"});
    return {};
  }
  if (j.is_number()) {
    double v = j.get<double>();
    // Short decimal literals such as 0.7 are read as the rational they spell.
    if (auto r = parse_rational(j.dump()); r && r->value() == v) return Point::from_rational(*r);
    return Point::from_double(v);
  }
  bad.push_back({ptr, "location is a number or an exact rational string"});
  return {};
}

inline double json_number(const json& j, const char* key, const std::string& ptr, double fallback,
                          std::vector<Violation>& bad, bool required = false) {
  if (!j.contains(key)) {
    if (required) bad.push_back({ptr + "/" + key, std::string(key) + " is required"});
    return fallback;
  }
  const auto& v = j.at(key);
  if (!v.is_number()) {
    bad.push_back({ptr + "/" + key, std::string(key) + " is a number"});
    return fallback;
  }
  return v.get<double>();
}

}  // namespace detail

/// Parses the model schema; collects structural and invariant violations.
inline ModelSpec parse_model(const json& j) {
  std::vector<Violation> bad;
  ModelSpec s;
  if (!j.is_object()) throw ModelError({{"", "model is a JSON object"}}, "model is not a JSON object");
  s.drift = detail::json_number(j, "drift", "", 0.0, bad, true);
  s.q = detail::json_number(j, "q", "", 0.0, bad);
  if (j.contains("atoms")) {
    const auto& a = j.at("atoms");
    if (!a.is_array()) {
      bad.push_back({"/atoms", "atoms is an array"});
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        std::string p = "/atoms/" + std::to_string(i);
        if (!a[i].is_object() || !a[i].contains("x")) {
          bad.push_back({p, "atom is an object with x and mass"});
          continue;
        }
        Atom at;
        at.loc = detail::json_point(a[i].at("x"), p + "/x", bad);
        at.mass = detail::json_number(a[i], "mass", p, 0.0, bad, true);
        s.atoms.push_back(at);
      }
    }
  }
  if (j.contains("atom_family") && !j.at("atom_family").is_null()) {
    const auto& f = j.at("atom_family");
    AtomFamily fam;
    if (f.contains("kind") && f.at("kind").is_string()) fam.kind = f.at("kind").get<std::string>();
    if (f.contains("cap")) {
      if (f.at("cap").is_number_integer())
        fam.cap = f.at("cap").get<int>();
      else
        bad.push_back({"/atom_family/cap", "atom_family.cap is an integer"});
    }
    if (f.contains("masses") && f.at("masses").is_array()) {
      for (std::size_t i = 0; i < f.at("masses").size(); ++i) {
        const auto& m = f.at("masses")[i];
        if (m.is_number())
          fam.masses.push_back(m.get<double>());
        else
          bad.push_back({"/atom_family/masses/" + std::to_string(i), "atom mass is a number"});
      }
    } else {
      bad.push_back({"/atom_family/masses", "atom_family.masses is an array"});
    }
    s.family = fam;
  }
  if (j.contains("ac") && !j.at("ac").is_null()) {
    const auto& a = j.at("ac");
    std::string kind = a.value("kind", std::string("none"));
    if (kind == "stable")
      s.ac.kind = AcKind::Stable;
    else if (kind == "tempered")
      s.ac.kind = AcKind::Tempered;
    else if (kind != "none")
      bad.push_back({"/ac/kind", "ac.kind in {none, stable, tempered}"});
    if (s.ac.kind != AcKind::None) {
      s.ac.C = detail::json_number(a, "C", "/ac", 0.0, bad, true);
      s.ac.alpha = detail::json_number(a, "alpha", "/ac", 0.0, bad, true);
      if (s.ac.kind == AcKind::Tempered) s.ac.b = detail::json_number(a, "b", "/ac", 0.0, bad, true);
    }
  }
  for (auto& v : validate(s)) bad.push_back(v);
  if (!bad.empty()) {
    std::string msg;
    for (const auto& e : bad) msg += (msg.empty() ? "" : "; ") + e.pointer + ": " + e.invariant;
    throw ModelError(bad, msg);
  }
  return s;
}

inline LevyModel model_from_json(const json& j) {
  ModelSpec s = parse_model(j);
  try {
    return LevyModel(std::move(s));
  } catch (const ModelError&) {
    throw;
  } catch (const ValidationError& e) {
    auto colon = std::string(e.what()).find(':');
    std::string ptr = colon == std::string::npos ? "" : std::string(e.what()).substr(0, colon);
    std::string inv = colon == std::string::npos ? e.what() : std::string(e.what()).substr(colon + 2);
    throw ModelError({{ptr, inv}}, e.what());
  }
}

inline LevyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("io", "cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("parse", std::string("model JSON does not parse: ") + e.what());
  }
  return model_from_json(j);
}

inline json point_json(const Point& p) {
  if (p.exact) return to_string(*p.exact);
  return p.value;
}

inline json model_to_json(const LevyModel& m) {
  const auto& s = m.spec();
  json j;
  j["drift"] = s.drift;
  j["q"] = s.q;
  j["atoms"] = json::array();
  for (const auto& a : s.atoms) j["atoms"].push_back({{"x", point_json(a.loc)}, {"mass", a.mass}});
  if (s.family) j["atom_family"] = {{"kind", s.family->kind}, {"masses", s.family->masses}, {"cap", s.family->cap}};
  const char* kinds[] = {"none", "stable", "tempered"};
  json ac = {{"kind", kinds[static_cast<int>(s.ac.kind)]}};
  if (s.ac.present()) {
    ac["C"] = s.ac.C;
    ac["alpha"] = s.ac.alpha;
    if (s.ac.kind == AcKind::Tempered) ac["b"] = s.ac.b;
  }
  j["ac"] = ac;
  return j;
}

}  // namespace subpot
