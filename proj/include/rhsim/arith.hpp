#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "rhsim/errors.hpp"

namespace rhsim {

// 128-bit helpers for the exact rational evaluations; products of picosecond
// durations and activation counts overflow 64 bits.
using u128 = unsigned __int128;

inline std::uint64_t floor_div_u128(u128 num, u128 den) {
  return static_cast<std::uint64_t>(num / den);
}

inline std::uint64_t ceil_div_u128(u128 num, u128 den) {
  return static_cast<std::uint64_t>((num + den - 1) / den);
}

/// Exact non-negative rational, kept reduced. Used for blast impact factors;
/// small enough that u128 intermediates never overflow.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Ratio of(std::uint64_t n, std::uint64_t d) {
    if (d == 0) throw ConfigError("ratio with zero denominator");
    std::uint64_t g = std::gcd(n, d);
    if (g == 0) g = 1;
    return Ratio{n / g, d / g};
  }

  bool operator==(const Ratio&) const = default;
  bool less_than(const Ratio& o) const {
    return static_cast<u128>(num) * o.den < static_cast<u128>(o.num) * den;
  }
  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

inline Ratio ratio_add(const Ratio& a, const Ratio& b) {
  std::uint64_t g = std::gcd(a.den, b.den);
  std::uint64_t lcm = a.den / g * b.den;
  u128 n = static_cast<u128>(a.num) * (lcm / a.den) +
           static_cast<u128>(b.num) * (lcm / b.den);
  std::uint64_t gn = std::gcd(static_cast<std::uint64_t>(n % lcm), lcm);
  if (n >> 64) throw ConfigError("ratio overflow");
  if (gn == 0) gn = 1;
  return Ratio{static_cast<std::uint64_t>(n) / gn, lcm / gn};
}

/// Parses "1", "0.5", "0.03125" into an exact rational over a power of ten.
inline Ratio parse_ratio(std::string_view text) {
  std::size_t i = 0;
  std::uint64_t whole = 0;
  bool any = false;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
    whole = whole * 10 + static_cast<std::uint64_t>(text[i] - '0');
    any = true;
    ++i;
  }
  std::uint64_t num = whole, den = 1;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      if (den > 1'000'000'000'000'000ULL) {
        throw ConfigError("ratio has too many decimal digits: '" + std::string(text) + "'");
      }
      num = num * 10 + static_cast<std::uint64_t>(text[i] - '0');
      den *= 10;
      any = true;
      ++i;
    }
  }
  if (!any || i != text.size()) {
    throw ConfigError("bad ratio literal: '" + std::string(text) + "'");
  }
  return Ratio::of(num, den);
}

}  // namespace rhsim
