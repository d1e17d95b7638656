#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

#include "subpot/error.hpp"

namespace subpot {

/// Exact rational with 64-bit parts. Arithmetic reports overflow through
/// std::nullopt so callers can fall back to tolerance comparisons.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
};

inline std::optional<Rational> make_rational(__int128 num, __int128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
  if (num > lim || num < -lim || den > lim) return std::nullopt;
  return Rational{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

inline std::optional<Rational> add(const Rational& a, const Rational& b) {
  return make_rational(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                       static_cast<__int128>(a.den) * b.den);
}

inline std::optional<Rational> sub(const Rational& a, const Rational& b) {
  return add(a, Rational{-b.num, b.den});
}

/// Parses "p/q", an integer, or a plain decimal such as "0.7" (taken as 7/10).
inline std::optional<Rational> parse_rational(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  auto parse_decimal = [](std::string_view s) -> std::optional<Rational> {
    if (s.empty()) return std::nullopt;
    bool neg = false;
    if (s.front() == '+' || s.front() == '-') {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    __int128 num = 0;
    __int128 den = 1;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : s) {
      if (c == '.') {
        if (seen_dot) return std::nullopt;
        seen_dot = true;
        continue;
      }
      if (c < '0' || c > '9') return std::nullopt;
      seen_digit = true;
      num = num * 10 + (c - '0');
      if (seen_dot) den *= 10;
      if (num > static_cast<__int128>(INT64_MAX) || den > static_cast<__int128>(INT64_MAX))
        return std::nullopt;
    }
    if (!seen_digit) return std::nullopt;
    return make_rational(neg ? -num : num, den);
  };

  text = trim(text);
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  auto p = parse_decimal(trim(text.substr(0, slash)));
  auto q = parse_decimal(trim(text.substr(slash + 1)));
  if (!p || !q || q->num == 0) return std::nullopt;
  return make_rational(static_cast<__int128>(p->num) * q->den,
                       static_cast<__int128>(p->den) * q->num);
}

inline std::string to_string(const Rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

/// A real location that may also carry its exact rational value.
struct Point {
  double value = 0.0;
  std::optional<Rational> exact;

  static Point from_double(double v) { return Point{v, std::nullopt}; }
  static Point from_rational(Rational r) { return Point{r.value(), r}; }
};

}  // namespace subpot
