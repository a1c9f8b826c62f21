#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rhsim/security.hpp"
#include "rhsim/simcore.hpp"

namespace rhsim {

using ordered_json = nlohmann::ordered_json;

inline ordered_json derived_to_json(const SimConfig& cfg) {
  ordered_json j;
  j["n_rh"] = cfg.bh.n_rh;
  j["n_rh_star"] = cfg.derived.n_rh_star;
  j["nrh_star_ratio"] = static_cast<double>(cfg.derived.n_rh_star) /
                        static_cast<double>(cfg.bh.n_rh);
  j["t_delay_ps"] = cfg.derived.t_delay;
  j["t_delay_human"] = format_duration(cfg.derived.t_delay);
  j["epoch_len_ps"] = cfg.derived.epoch_len;
  j["history_capacity"] = cfg.derived.history_capacity;
  j["counter_saturation"] = cfg.derived.counter_saturation;
  j["throttle_saturation"] = cfg.derived.throttle_saturation;
  j["window_bound"] = cfg.window_bound_floor();
  return j;
}

inline ordered_json metrics_to_json(const SimMetrics& m, const SimConfig& cfg) {
  ordered_json j;
  j["end_time_ps"] = m.end_time;
  j["served_total"] = m.served_total;
  j["unserved_total"] = m.unserved_total;
  j["acts"] = m.acts;
  j["refreshes"] = m.refreshes;
  j["row_buffer"] = {{"hits", m.rb_hits}, {"misses", m.rb_misses},
                     {"conflicts", m.rb_conflicts}};

  ordered_json threads = ordered_json::array();
  for (std::size_t t = 0; t < m.threads.size(); ++t) {
    const ThreadStats& ts = m.threads[t];
    ordered_json tj;
    tj["thread"] = t;
    tj["served"] = ts.served;
    tj["unserved"] = ts.unserved;
    tj["latency_mean_ps"] =
        ts.served == 0 ? 0.0
                       : static_cast<double>(ts.latency_sum) /
                             static_cast<double>(ts.served);
    tj["latency_max_ps"] = ts.latency_max;
    threads.push_back(tj);
  }
  j["threads"] = threads;

  j["blocked"] = {{"count", m.blocked_delays.size()},
                  {"fp_count", m.fp_count},
                  {"fp_rate", m.fp_rate},
                  {"delay_p50_ps", m.delay_percentile(0.50)},
                  {"delay_p90_ps", m.delay_percentile(0.90)},
                  {"delay_max_ps", m.delay_max()}};

  ordered_json oracle;
  oracle["max_window"] = m.oracle_max_window;
  oracle["window_bound"] = m.window_bound;
  oracle["rows_tracked"] = m.oracle_rows_tracked;
  oracle["bound_exceeded"] = m.bound_exceeded;
  oracle["safety_violation"] = m.safety_violation;
  // Worst rows only; the full per-row map can be very large.
  ordered_json worst = ordered_json::array();
  {
    auto rows = m.oracle_per_row;
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });
    for (std::size_t i = 0; i < rows.size() && i < 8; ++i) {
      worst.push_back({{"bank", rows[i].first >> 40},
                       {"row", rows[i].first & ((1ULL << 40) - 1)},
                       {"max_window", rows[i].second}});
    }
  }
  oracle["worst_rows"] = worst;
  if (cfg.bh.blast.blast_radius > 1) {
    oracle["weighted_max"] = m.weighted_max;
    oracle["weighted_scale"] = m.weighted_scale;
    oracle["weighted_overdrive"] = m.weighted_overdrive;
  }
  j["oracle"] = oracle;

  if (m.para_max_exposure != 0 || m.para_failure) {
    j["para"] = {{"max_exposure", m.para_max_exposure},
                 {"failure", m.para_failure}};
  }

  if (!m.rhli_epochs.empty()) {
    ordered_json epochs = ordered_json::array();
    for (const auto& matrix : m.rhli_epochs) {
      ordered_json rows = ordered_json::array();
      std::size_t threads = matrix.size() / m.rhli_banks;
      for (std::size_t t = 0; t < threads; ++t) {
        ordered_json row = ordered_json::array();
        for (std::size_t b = 0; b < m.rhli_banks; ++b)
          row.push_back(matrix[t * m.rhli_banks + b]);
        rows.push_back(row);
      }
      epochs.push_back(rows);
    }
    j["rhli_epochs"] = epochs;
  }

  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << m.command_hash;
  j["command_hash"] = hash.str();
  return j;
}

namespace detail {

inline void flatten_json(const ordered_json& j, const std::string& prefix,
                         std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      flatten_json(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

}  // namespace detail

/// Flat CSV: one `metric,value` row per scalar, dotted paths for nesting.
inline std::string metrics_to_csv(const ordered_json& j) {
  std::ostringstream out;
  out << "metric,value\n";
  detail::flatten_json(j, "", out);
  return out.str();
}

/// Writes the document as JSON or CSV depending on the path extension.
inline void write_metrics_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    out << metrics_to_csv(j);
  } else {
    out << j.dump(2) << '\n';
  }
}

inline ordered_json verdict_to_json(const SecurityVerdict& v) {
  ordered_json j;
  j["satisfiable"] = v.satisfiable;
  j["threshold"] = v.threshold;
  j["epoch_budget"] = v.epoch_budget;
  j["max_total_acts"] = v.max_total_acts;
  j["satisfiable_with_first_epoch_slack"] = v.satisfiable_with_slack;
  j["max_total_acts_with_first_epoch_slack"] = v.max_total_acts_with_slack;
  j["bounds"] = {{"t0", v.bounds.used[0]}, {"t1", v.bounds.used[1]},
                 {"t2", v.bounds.used[2]}, {"t3", v.bounds.used[3]},
                 {"t4", v.bounds.used[4]},
                 {"t2_subtractive_variant", v.bounds.t2_subtractive},
                 {"t3_loose_variant", v.bounds.t3_loose}};
  if (v.witness) {
    j["witness"] = {{"t0", v.witness->n[0]}, {"t1", v.witness->n[1]},
                    {"t2", v.witness->n[2]}, {"t3", v.witness->n[3]},
                    {"t4", v.witness->n[4]}};
  }
  return j;
}

}  // namespace rhsim
