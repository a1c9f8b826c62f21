#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rhsim/arith.hpp"
#include "rhsim/errors.hpp"
#include "rhsim/time.hpp"

namespace rhsim {

/// Rank/bank timing parameters and geometry. Single-rank model.
struct DramTimings {
  picos t_rc = 0;    // min ACT-to-ACT interval, same bank
  picos t_faw = 0;   // rolling window admitting at most four ACTs per rank
  picos t_refw = 0;  // refresh window
  std::uint32_t banks_per_rank = 0;
  std::uint64_t rows_per_bank = 0;
  std::uint32_t threads = 0;

  void validate() const {
    if (t_rc == 0 || t_faw == 0 || t_refw == 0)
      throw ConfigError("all durations must be positive");
    // t_faw can sit below t_rc (it constrains the rank, t_rc the bank);
    // both must be far below the refresh window.
    if (!(t_rc < t_refw && t_faw < t_refw))
      throw ConfigError("timing order violated: need t_rc, t_faw < t_refw");
    if (banks_per_rank < 1) throw ConfigError("banks_per_rank must be >= 1");
    if (rows_per_bank < 2) throw ConfigError("rows_per_bank must be >= 2");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }

  std::uint32_t row_bits() const {
    return static_cast<std::uint32_t>(std::bit_width(rows_per_bank - 1));
  }
};

/// Cumulative-disturbance profile: how strongly an aggressor at distance k
/// disturbs a victim, relative to an immediately adjacent aggressor.
struct BlastProfile {
  std::uint32_t blast_radius = 1;
  std::vector<Ratio> impact_factors;  // c_1..c_{blast_radius}

  static BlastProfile adjacent_only() {
    return BlastProfile{1, {Ratio{1, 1}}};
  }

  /// Geometric profile c_k = 0.5^(k-1), the worst case observed in
  /// characterization studies.
  static BlastProfile geometric(std::uint32_t radius) {
    BlastProfile p;
    p.blast_radius = radius;
    for (std::uint32_t k = 0; k < radius; ++k)
      p.impact_factors.push_back(Ratio{1, std::uint64_t{1} << k});
    return p;
  }

  void validate() const {
    if (impact_factors.empty())
      throw ConfigError("blast profile needs at least one impact factor");
    if (impact_factors.size() != blast_radius)
      throw ConfigError("impact factor list length must equal blast_radius");
    if (!(impact_factors[0] == Ratio{1, 1}))
      throw ConfigError("first blast impact factor must be exactly 1");
    for (std::size_t k = 1; k < impact_factors.size(); ++k) {
      const Ratio& c = impact_factors[k];
      if (c.num == 0 || !c.less_than(Ratio{1, 1}))
        throw ConfigError("blast impact factors beyond distance 1 must satisfy 0 < c < 1");
    }
  }
};

struct BlockHammerParams {
  std::uint64_t n_rh = 0;  // RowHammer threshold per refresh window
  BlastProfile blast;
  std::uint64_t n_bl = 0;            // blacklisting threshold
  picos t_cbf = 0;                   // counting Bloom filter lifetime
  std::uint32_t cbf_counters = 0;    // counters per CBF, power of two
  std::uint32_t hash_count = 0;      // H3 functions per CBF
  std::uint32_t quota_max = 0;       // baseline in-flight requests per <thread,bank>
  std::optional<picos> t_delay_override;  // what-if knob for security analysis
};

struct DerivedParams {
  std::uint64_t n_rh_star = 0;      // effective threshold after blast discount
  picos t_delay = 0;                // enforced spacing for blacklisted rows
  picos epoch_len = 0;              // t_cbf / 2
  std::uint64_t history_capacity = 0;
  std::uint64_t counter_saturation = 0;   // = n_bl
  std::uint64_t throttle_saturation = 0;  // = floor(n_rh_star * t_cbf / t_refw)
};

/// Effective RowHammer threshold under concurrent many-sided hammering:
/// floor(n_rh / (2 * sum of impact factors)), exact rational arithmetic.
inline std::uint64_t compute_nrh_star(std::uint64_t n_rh, const BlastProfile& blast) {
  blast.validate();
  Ratio sum{0, 1};
  for (const Ratio& c : blast.impact_factors) sum = ratio_add(sum, c);
  // floor(n_rh * den / (2 * num))
  u128 num = static_cast<u128>(n_rh) * sum.den;
  u128 den = static_cast<u128>(2) * sum.num;
  return floor_div_u128(num, den);
}

/// Enforced activation spacing for a blacklisted row. The worst-case pattern
/// spends n_bl activations back to back at t_rc, then the remaining budget
/// (t_cbf/t_refw)*n_rh_star - n_bl is spread evenly over the rest of the
/// filter lifetime. Exact rationals over picoseconds, rounded up (a longer
/// delay only lowers the achievable rate).
inline picos compute_tdelay(const BlockHammerParams& p, const DramTimings& t,
                            std::uint64_t n_rh_star) {
  u128 budget_num = static_cast<u128>(p.t_cbf) * n_rh_star;  // per t_refw
  u128 spent = static_cast<u128>(p.n_bl) * t.t_refw;
  if (budget_num <= spent)
    throw ConfigError("n_bl must be below (t_cbf/t_refw)*n_rh_star");
  if (p.t_cbf < static_cast<u128>(p.n_bl) * t.t_rc)
    throw ConfigError("n_bl back-to-back activations do not fit in t_cbf");
  u128 num = (static_cast<u128>(p.t_cbf) - static_cast<u128>(p.n_bl) * t.t_rc) *
             t.t_refw;
  u128 den = budget_num - spent;
  return ceil_div_u128(num, den);
}

/// History buffer capacity: t_faw admits at most four activations per rank, so
/// a t_delay window holds at most ceil(4 * t_delay / t_faw) records.
inline std::uint64_t compute_history_capacity(picos t_delay, picos t_faw) {
  if (t_delay == 0 || t_faw == 0)
    throw ConfigError("history capacity needs positive durations");
  return ceil_div_u128(static_cast<u128>(4) * t_delay, t_faw);
}

/// Physical ring allocation for the history buffer. Covering a t_delay
/// interval with ceil(t_delay/t_faw) four-activation windows bounds the live
/// entries by 4*ceil(t_delay/t_faw); burst alignment can actually reach that,
/// which exceeds ceil(4*t_delay/t_faw) by up to 3 when t_faw does not divide
/// evenly (the two agree at the flagship numbers). The ring takes the larger.
inline std::uint64_t history_ring_slots(picos t_delay, picos t_faw) {
  std::uint64_t reported = compute_history_capacity(t_delay, t_faw);
  std::uint64_t covered = 4 * ceil_div_u128(t_delay, t_faw);
  return std::max(reported, covered);
}

/// Validates raw parameters and computes every derived quantity. Pure.
inline DerivedParams resolve(const BlockHammerParams& p, const DramTimings& t) {
  t.validate();
  p.blast.validate();
  if (p.n_rh == 0) throw ConfigError("n_rh must be positive");
  if (p.t_cbf == 0 || p.t_cbf > t.t_refw)
    throw ConfigError("t_cbf must be positive and at most t_refw");
  if (p.t_cbf % 2 != 0) throw ConfigError("t_cbf must be an even picosecond count");
  if (p.cbf_counters == 0 || (p.cbf_counters & (p.cbf_counters - 1)) != 0)
    throw ConfigError("cbf_counters must be a power of two");
  if (p.hash_count < 1) throw ConfigError("hash_count must be >= 1");
  if (p.quota_max < 1) throw ConfigError("quota_max must be >= 1");

  DerivedParams d;
  d.n_rh_star = compute_nrh_star(p.n_rh, p.blast);
  if (p.n_bl == 0 || p.n_bl >= d.n_rh_star)
    throw ConfigError("need 0 < n_bl < n_rh_star");
  d.t_delay = compute_tdelay(p, t, d.n_rh_star);
  if (p.t_delay_override) {
    d.t_delay = *p.t_delay_override;
  }
  if (d.t_delay <= t.t_rc)
    throw ConfigError("derived t_delay must exceed t_rc");
  d.epoch_len = p.t_cbf / 2;
  d.history_capacity = compute_history_capacity(d.t_delay, t.t_faw);
  if (d.history_capacity < 4)
    throw ConfigError("history capacity below the four-activation floor");
  d.counter_saturation = p.n_bl;
  d.throttle_saturation =
      floor_div_u128(static_cast<u128>(d.n_rh_star) * p.t_cbf, t.t_refw);
  if (d.throttle_saturation <= p.n_bl)
    throw ConfigError("throttle saturation must exceed n_bl");
  // The zero-quota gate can only cap the RHLI numerator at its denominator if
  // the in-flight window never overshoots it.
  if (p.quota_max > d.throttle_saturation - p.n_bl)
    throw ConfigError("quota_max must not exceed throttle_saturation - n_bl");
  return d;
}

struct SimConfig {
  DramTimings timings;
  BlockHammerParams bh;
  DerivedParams derived;
  double para_failure_target = 1e-15;

  /// Exact RHLI denominator, scaled by t_refw:
  /// rhli = count * t_refw / (n_rh_star * t_cbf - n_bl * t_refw).
  u128 rhli_denominator_scaled() const {
    return static_cast<u128>(derived.n_rh_star) * bh.t_cbf -
           static_cast<u128>(bh.n_bl) * timings.t_refw;
  }

  /// Safety bound per sliding t_refw window: count <= (t_cbf/t_refw)*n_rh_star,
  /// compared exactly as count * t_refw <= n_rh_star * t_cbf.
  bool exceeds_window_bound(std::uint64_t count) const {
    return static_cast<u128>(count) * timings.t_refw >
           static_cast<u128>(derived.n_rh_star) * bh.t_cbf;
  }
  std::uint64_t window_bound_floor() const {
    return floor_div_u128(static_cast<u128>(derived.n_rh_star) * bh.t_cbf,
                          timings.t_refw);
  }
};

namespace detail {

inline std::uint64_t parse_count(const std::string& v, const std::string& key) {
  if (v.empty()) throw ConfigError("empty value for " + key);
  std::uint64_t out = 0;
  for (char c : v) {
    if (c < '0' || c > '9') throw ConfigError("bad integer for " + key + ": '" + v + "'");
    out = out * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return out;
}

inline std::vector<Ratio> parse_ratio_list(const std::string& v) {
  std::vector<Ratio> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t comma = v.find(',', start);
    std::string item = v.substr(start, comma == std::string::npos ? std::string::npos
                                                                  : comma - start);
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) throw ConfigError("empty blast impact factor");
    out.push_back(parse_ratio(item.substr(a, b - a + 1)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parses the flat `key = value` config text. Durations accept ns/us/ms
/// suffixes; `#` starts a comment; unknown keys are errors.
inline SimConfig parse_config(const std::string& text) {
  DramTimings t;
  BlockHammerParams p;
  double para_target = 1e-15;
  bool blast_radius_seen = false;
  std::uint64_t blast_radius = 1;
  std::vector<Ratio> impact;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("missing '=' on config line " + std::to_string(lineno));
    auto trim = [](std::string s) {
      std::size_t x = s.find_first_not_of(" \t\r");
      std::size_t y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("empty key or value on config line " + std::to_string(lineno));

    if (key == "t_rc") t.t_rc = parse_duration(val);
    else if (key == "t_faw") t.t_faw = parse_duration(val);
    else if (key == "t_refw") t.t_refw = parse_duration(val);
    else if (key == "banks_per_rank")
      t.banks_per_rank = static_cast<std::uint32_t>(detail::parse_count(val, key));
    else if (key == "rows_per_bank") t.rows_per_bank = detail::parse_count(val, key);
    else if (key == "threads")
      t.threads = static_cast<std::uint32_t>(detail::parse_count(val, key));
    else if (key == "n_rh") p.n_rh = detail::parse_count(val, key);
    else if (key == "n_bl") p.n_bl = detail::parse_count(val, key);
    else if (key == "t_cbf") p.t_cbf = parse_duration(val);
    else if (key == "cbf_counters")
      p.cbf_counters = static_cast<std::uint32_t>(detail::parse_count(val, key));
    else if (key == "hash_count")
      p.hash_count = static_cast<std::uint32_t>(detail::parse_count(val, key));
    else if (key == "quota_max")
      p.quota_max = static_cast<std::uint32_t>(detail::parse_count(val, key));
    else if (key == "blast_radius") {
      blast_radius = detail::parse_count(val, key);
      blast_radius_seen = true;
    } else if (key == "blast_impact_factors") impact = detail::parse_ratio_list(val);
    else if (key == "t_delay_override") p.t_delay_override = parse_duration(val);
    else if (key == "para_failure_target") {
      para_target = std::stod(val);
      if (!(para_target > 0.0 && para_target < 1.0))
        throw ConfigError("para_failure_target must be in (0,1)");
    } else {
      throw ConfigError("unknown config key '" + key + "' on line " +
                        std::to_string(lineno));
    }
  }

  if (impact.empty() && blast_radius == 1) {
    p.blast = BlastProfile::adjacent_only();
  } else {
    p.blast.blast_radius = static_cast<std::uint32_t>(blast_radius);
    p.blast.impact_factors = impact;
    if (!blast_radius_seen)
      p.blast.blast_radius = static_cast<std::uint32_t>(impact.size());
  }

  SimConfig cfg;
  cfg.timings = t;
  cfg.bh = p;
  cfg.para_failure_target = para_target;
  cfg.derived = resolve(p, t);
  return cfg;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rhsim
