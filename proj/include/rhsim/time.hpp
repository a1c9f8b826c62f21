#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>

#include "rhsim/errors.hpp"

namespace rhsim {

// All timestamps and durations are unsigned integer picoseconds. DDR timing
// constants are exact at this resolution (t_RC = 46.25 ns = 46,250 ps), so no
// floating point enters timing or safety arithmetic.
using picos = std::uint64_t;

inline constexpr picos kPsPerNs = 1'000;
inline constexpr picos kPsPerUs = 1'000'000;
inline constexpr picos kPsPerMs = 1'000'000'000;
inline constexpr picos kPsPerS = 1'000'000'000'000;

/// Parses a duration literal: a bare integer is picoseconds; decimal values
/// with an `ns`/`us`/`ms`/`s` suffix are converted exactly. Values that do not
/// land on an integer picosecond count are rejected.
inline picos parse_duration(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t begin = i;
  std::uint64_t whole = 0;
  bool any_digit = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    whole = whole * 10 + static_cast<std::uint64_t>(text[i] - '0');
    any_digit = true;
    ++i;
  }
  std::uint64_t frac = 0;
  std::uint64_t frac_scale = 1;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      frac = frac * 10 + static_cast<std::uint64_t>(text[i] - '0');
      frac_scale *= 10;
      any_digit = true;
      ++i;
    }
  }
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t unit_begin = i;
  while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::string_view unit = text.substr(unit_begin, i - unit_begin);
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (!any_digit || i != text.size()) {
    throw ConfigError("bad duration literal: '" + std::string(text) + "'");
  }

  picos scale = 0;
  if (unit.empty() || unit == "ps") {
    scale = 1;
  } else if (unit == "ns") {
    scale = kPsPerNs;
  } else if (unit == "us") {
    scale = kPsPerUs;
  } else if (unit == "ms") {
    scale = kPsPerMs;
  } else if (unit == "s") {
    scale = kPsPerS;
  } else {
    throw ConfigError("unknown duration unit '" + std::string(unit) + "' in '" +
                      std::string(text) + "'");
  }
  // whole*scale + frac*scale/frac_scale, requiring the fractional part to be
  // an exact picosecond count.
  if (scale == 1 && frac_scale != 1) {
    throw ConfigError("sub-picosecond duration: '" + std::string(text) + "'");
  }
  std::uint64_t frac_ps_num = frac * scale;
  if (frac_ps_num % frac_scale != 0) {
    throw ConfigError("duration is not an integer picosecond count: '" +
                      std::string(text) + "'");
  }
  return whole * scale + frac_ps_num / frac_scale;
}

/// Human-readable rendering for reports (ps stays exact in machine output).
inline std::string format_duration(picos t) {
  char buf[64];
  if (t >= kPsPerMs) {
    std::snprintf(buf, sizeof buf, "%.6g ms", static_cast<double>(t) / kPsPerMs);
  } else if (t >= kPsPerUs) {
    std::snprintf(buf, sizeof buf, "%.6g us", static_cast<double>(t) / kPsPerUs);
  } else if (t >= kPsPerNs) {
    std::snprintf(buf, sizeof buf, "%.6g ns", static_cast<double>(t) / kPsPerNs);
  } else {
    std::snprintf(buf, sizeof buf, "%llu ps", static_cast<unsigned long long>(t));
  }
  return buf;
}

}  // namespace rhsim
