#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rhsim/log.hpp"
#include "rhsim/metrics_io.hpp"
#include "rhsim/security.hpp"
#include "rhsim/simcore.hpp"
#include "rhsim/tracegen.hpp"

namespace rhsim {

// Process exit codes, one per failure class.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitSat = 2,         // verify found a satisfiable attack census
  kExitTraceError = 3,
  kExitMissingFile = 4,
  kExitViolation = 5,   // safety oracle tripped under a safety-claiming mechanism
};

struct RunSpec {
  std::vector<std::string> config_paths;
  std::optional<std::string> trace_path;
  std::optional<std::string> gen_spec;  // e.g. "attack:double_sided", "benign:H"
  MechanismKind mechanism = MechanismKind::kNone;
  ThrottleMode mode = ThrottleMode::kFullFunctional;
  std::uint64_t seed = 0;
  std::optional<std::string> out_path;
  std::optional<picos> horizon;
  unsigned jobs = 1;
};

inline MechanismKind parse_mechanism(const std::string& s) {
  if (s == "none") return MechanismKind::kNone;
  if (s == "blockhammer") return MechanismKind::kBlockHammer;
  if (s == "para") return MechanismKind::kPara;
  throw ConfigError("unknown mechanism '" + s + "' (none|blockhammer|para)");
}

inline ThrottleMode parse_mode(const std::string& s) {
  if (s == "observe") return ThrottleMode::kObserveOnly;
  if (s == "full") return ThrottleMode::kFullFunctional;
  throw ConfigError("unknown mode '" + s + "' (observe|full)");
}

/// Builds a trace from a generator spec: `attack:double_sided`,
/// `attack:many_sided:<n>`, `attack:epoch_straddle`, `attack:random`,
/// `benign:L|M|H`, `mix:attack+benign`.
inline Trace build_trace(const std::string& spec, const SimConfig& cfg,
                         picos horizon, std::uint64_t seed) {
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      std::size_t colon = s.find(':', start);
      parts.push_back(s.substr(start, colon == std::string::npos ? std::string::npos
                                                                 : colon - start));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    return parts;
  };
  auto parts = split(spec);
  if (parts[0] == "attack") {
    if (parts.size() < 2) throw ConfigError("attack generator needs a variant");
    if (parts[1] == "double_sided")
      return gen_attack_trace(AttackKind::kDoubleSided, cfg, horizon);
    if (parts[1] == "many_sided") {
      if (parts.size() < 3) throw ConfigError("many_sided needs :<n>");
      return gen_attack_trace(AttackKind::kManySided, cfg, horizon,
                              static_cast<std::uint32_t>(std::stoul(parts[2])));
    }
    if (parts[1] == "epoch_straddle")
      return gen_attack_trace(AttackKind::kEpochStraddle, cfg, horizon);
    if (parts[1] == "random")
      return gen_attack_trace(AttackKind::kRandom, cfg, horizon, 0, seed);
    throw ConfigError("unknown attack variant '" + parts[1] + "'");
  }
  if (parts[0] == "benign") {
    if (parts.size() < 2) throw ConfigError("benign generator needs a category");
    BenignCategory cat;
    if (parts[1] == "L") cat = BenignCategory::kL;
    else if (parts[1] == "M") cat = BenignCategory::kM;
    else if (parts[1] == "H") cat = BenignCategory::kH;
    else throw ConfigError("unknown benign category '" + parts[1] + "'");
    return gen_benign(cfg, cat, horizon, seed);
  }
  if (parts[0] == "mix") return gen_mixed(cfg, horizon, seed);
  throw ConfigError("unknown generator kind '" + parts[0] + "'");
}

/// Default generator horizon: four filter lifetimes.
inline picos default_horizon(const SimConfig& cfg) { return 4 * cfg.bh.t_cbf; }

namespace detail {

inline int run_one_config(const RunSpec& spec, const std::string& config_path,
                          const std::string& out_path) {
  SimConfig cfg = load_config(config_path);
  log_info("config %s: t_delay %llu ps, window bound %llu", config_path.c_str(),
           static_cast<unsigned long long>(cfg.derived.t_delay),
           static_cast<unsigned long long>(cfg.window_bound_floor()));
  Trace trace;
  if (spec.trace_path) {
    if (!std::filesystem::exists(*spec.trace_path)) {
      std::cerr << "rhsim: trace file not found: " << *spec.trace_path << "\n";
      return kExitMissingFile;
    }
    trace = load_trace(*spec.trace_path);
  } else {
    picos h = spec.horizon.value_or(default_horizon(cfg));
    trace = build_trace(*spec.gen_spec, cfg, h, spec.seed);
  }

  auto mech = make_mechanism(spec.mechanism, cfg, spec.mode, spec.seed);
  RunOptions opts;
  opts.horizon = spec.horizon;
  log_info("running %zu requests under %s", trace.size(), to_string(spec.mechanism));
  SimMetrics m = run(cfg, trace, *mech, opts);
  log_info("served %llu, acts %llu, max window %llu",
           static_cast<unsigned long long>(m.served_total),
           static_cast<unsigned long long>(m.acts),
           static_cast<unsigned long long>(m.oracle_max_window));

  ordered_json j;
  j["config"] = config_path;
  j["mechanism"] = to_string(spec.mechanism);
  if (spec.mechanism == MechanismKind::kBlockHammer)
    j["mode"] = spec.mode == ThrottleMode::kObserveOnly ? "observe" : "full";
  j["seed"] = spec.seed;
  j["derived"] = derived_to_json(cfg);
  j["metrics"] = metrics_to_json(m, cfg);

  if (!out_path.empty()) {
    write_metrics_file(out_path, j);
  } else {
    std::cout << j.dump(2) << "\n";
  }

  // A run that demonstrates a RowHammer-unsafe outcome, judged by the
  // mechanism's own criterion, exits with the violation code.
  if (m.safety_violation) {
    std::cerr << "rhsim: safety oracle violation: max window count "
              << m.oracle_max_window << " exceeds bound " << m.window_bound
              << " under a mechanism claiming safety\n";
    return kExitViolation;
  }
  if (spec.mechanism == MechanismKind::kPara && m.para_failure) {
    std::cerr << "rhsim: a victim row accumulated the threshold un-refreshed "
                 "adjacent activations under para\n";
    return kExitViolation;
  }
  if (spec.mechanism != MechanismKind::kPara && m.bound_exceeded) {
    std::cerr << "rhsim: unmitigated oracle violation: max window count "
              << m.oracle_max_window << " exceeds bound " << m.window_bound << "\n";
    return kExitViolation;
  }
  return kExitOk;
}

inline std::string out_path_for(const RunSpec& spec, const std::string& config_path,
                                bool multi) {
  if (!spec.out_path) return "";
  if (!multi) return *spec.out_path;
  std::filesystem::path out(*spec.out_path);
  std::filesystem::path cfg(config_path);
  std::string stem = out.stem().string() + "." + cfg.stem().string();
  return (out.parent_path() / (stem + out.extension().string())).string();
}

}  // namespace detail

/// `simulate`: run one config (or a --jobs parallel sweep over several).
inline int cmd_simulate(const RunSpec& spec) {
  try {
    if (spec.config_paths.empty()) throw ConfigError("simulate needs --config");
    if (!spec.trace_path && !spec.gen_spec)
      throw ConfigError("simulate needs exactly one of --trace / --gen");
    if (spec.trace_path && spec.gen_spec)
      throw ConfigError("simulate takes --trace or --gen, not both");
    for (const auto& p : spec.config_paths) {
      if (!std::filesystem::exists(p)) {
        std::cerr << "rhsim: config file not found: " << p << "\n";
        return kExitMissingFile;
      }
    }

    bool multi = spec.config_paths.size() > 1;
    if (!multi) {
      return detail::run_one_config(spec, spec.config_paths[0],
                                    detail::out_path_for(spec, spec.config_paths[0], false));
    }
    // Independent runs; worst exit code wins.
    std::vector<int> results(spec.config_paths.size(), kExitOk);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    unsigned jobs = std::max(1u, spec.jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= spec.config_paths.size()) break;
          try {
            results[i] = detail::run_one_config(
                spec, spec.config_paths[i],
                detail::out_path_for(spec, spec.config_paths[i], true));
          } catch (const ConfigError& e) {
            std::cerr << "rhsim: " << spec.config_paths[i] << ": " << e.what() << "\n";
            results[i] = kExitConfigError;
          } catch (const ParseError& e) {
            std::cerr << "rhsim: " << spec.config_paths[i] << ": " << e.what() << "\n";
            results[i] = kExitTraceError;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    int worst = kExitOk;
    for (int r : results) worst = std::max(worst, r);
    return worst;
  } catch (const ParseError& e) {
    std::cerr << "rhsim: trace error: " << e.what() << "\n";
    return kExitTraceError;
  } catch (const ConfigError& e) {
    std::cerr << "rhsim: config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

/// `verify`: SAT/UNSAT census search plus the per-epoch-type bound table.
inline int cmd_verify(const std::string& config_path) {
  try {
    if (!std::filesystem::exists(config_path)) {
      std::cerr << "rhsim: config file not found: " << config_path << "\n";
      return kExitMissingFile;
    }
    SimConfig cfg = load_config(config_path);
    SecurityVerdict v = verify_unsat(cfg);

    std::printf("config: %s\n", config_path.c_str());
    std::printf("threshold (per-lifetime budget): %llu\n",
                static_cast<unsigned long long>(v.threshold));
    std::printf("epoch budget: %llu epochs of %s\n",
                static_cast<unsigned long long>(v.epoch_budget),
                format_duration(cfg.derived.epoch_len).c_str());
    std::printf("%-6s %-20s\n", "type", "max acts per epoch");
    const char* names[5] = {"T0", "T1", "T2", "T3", "T4"};
    for (int i = 0; i < 5; ++i)
      std::printf("%-6s %llu\n", names[i],
                  static_cast<unsigned long long>(v.bounds.used[i]));
    std::printf("T2 subtractive variant: %lld (reported only)\n",
                static_cast<long long>(v.bounds.t2_subtractive));
    std::printf("T3 loose variant: %llu (reported only)\n",
                static_cast<unsigned long long>(v.bounds.t3_loose));
    std::printf("max admissible total: %llu\n",
                static_cast<unsigned long long>(v.max_total_acts));
    std::printf("with first-epoch slack: %s (max total %llu)\n",
                v.satisfiable_with_slack ? "SAT" : "UNSAT",
                static_cast<unsigned long long>(v.max_total_acts_with_slack));
    if (v.satisfiable) {
      std::printf("verdict: SAT\n");
      std::printf("witness census: T0=%llu T1=%llu T2=%llu T3=%llu T4=%llu\n",
                  static_cast<unsigned long long>(v.witness->n[0]),
                  static_cast<unsigned long long>(v.witness->n[1]),
                  static_cast<unsigned long long>(v.witness->n[2]),
                  static_cast<unsigned long long>(v.witness->n[3]),
                  static_cast<unsigned long long>(v.witness->n[4]));
      return kExitSat;
    }
    std::printf("verdict: UNSAT\n");
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "rhsim: config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

/// `derive`: print every derived parameter as a table and as JSON.
inline int cmd_derive(const std::string& config_path,
                      const std::optional<std::string>& out_path = std::nullopt) {
  try {
    if (!std::filesystem::exists(config_path)) {
      std::cerr << "rhsim: config file not found: " << config_path << "\n";
      return kExitMissingFile;
    }
    SimConfig cfg = load_config(config_path);
    ordered_json j = derived_to_json(cfg);

    std::printf("%-22s %s\n", "parameter", "value");
    std::printf("%-22s %llu\n", "n_rh", static_cast<unsigned long long>(cfg.bh.n_rh));
    std::printf("%-22s %llu\n", "n_rh_star",
                static_cast<unsigned long long>(cfg.derived.n_rh_star));
    std::printf("%-22s %.6f\n", "nrh_star_ratio",
                j["nrh_star_ratio"].get<double>());
    std::printf("%-22s %llu ps (%s)\n", "t_delay",
                static_cast<unsigned long long>(cfg.derived.t_delay),
                format_duration(cfg.derived.t_delay).c_str());
    std::printf("%-22s %llu ps\n", "epoch_len",
                static_cast<unsigned long long>(cfg.derived.epoch_len));
    std::printf("%-22s %llu\n", "history_capacity",
                static_cast<unsigned long long>(cfg.derived.history_capacity));
    std::printf("%-22s %llu\n", "counter_saturation",
                static_cast<unsigned long long>(cfg.derived.counter_saturation));
    std::printf("%-22s %llu\n", "throttle_saturation",
                static_cast<unsigned long long>(cfg.derived.throttle_saturation));
    std::printf("%s\n", j.dump(2).c_str());
    if (out_path) write_metrics_file(*out_path, j);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "rhsim: config error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace rhsim
