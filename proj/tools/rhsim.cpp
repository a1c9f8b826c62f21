#include <CLI11.hpp>

#include "rhsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rhsim - trace-driven DRAM controller simulator with "
               "activation-rate throttling and an executable safety check"};
  app.require_subcommand(1);

  rhsim::RunSpec spec;
  std::string mechanism = "none";
  std::string mode = "full";
  std::string horizon;

  CLI::App* simulate = app.add_subcommand("simulate", "run a trace or generator");
  simulate->add_option("--config", spec.config_paths, "config file(s)")->required();
  std::string trace_path, gen_spec, out_path;
  simulate->add_option("--trace", trace_path, "trace file (ready_at_ps,thread,bank,row)");
  simulate->add_option("--gen", gen_spec,
                       "generator spec: attack:double_sided | attack:many_sided:<n> | "
                       "attack:epoch_straddle | attack:random | benign:L|M|H | mix:attack+benign");
  simulate->add_option("--mechanism", mechanism, "none | blockhammer | para");
  simulate->add_option("--mode", mode, "blockhammer mode: observe | full");
  simulate->add_option("--seed", spec.seed, "RNG seed (default 0)");
  simulate->add_option("--out", out_path, "metrics file (.json or .csv; default stdout)");
  simulate->add_option("--horizon", horizon, "simulation horizon (duration, e.g. 2.56ms)");
  simulate->add_option("--jobs", spec.jobs, "parallel workers for multi-config sweeps");

  std::string verify_config;
  CLI::App* verify = app.add_subcommand("verify", "attack-feasibility census search");
  verify->add_option("--config", verify_config, "config file")->required();

  std::string derive_config, derive_out;
  CLI::App* derive = app.add_subcommand("derive", "print derived parameters");
  derive->add_option("--config", derive_config, "config file")->required();
  derive->add_option("--out", derive_out, "also write JSON/CSV to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (!trace_path.empty()) spec.trace_path = trace_path;
      if (!gen_spec.empty()) spec.gen_spec = gen_spec;
      if (!out_path.empty()) spec.out_path = out_path;
      if (!horizon.empty()) spec.horizon = rhsim::parse_duration(horizon);
      spec.mechanism = rhsim::parse_mechanism(mechanism);
      spec.mode = rhsim::parse_mode(mode);
      return rhsim::cmd_simulate(spec);
    }
    if (verify->parsed()) return rhsim::cmd_verify(verify_config);
    if (derive->parsed()) {
      return rhsim::cmd_derive(derive_config,
                               derive_out.empty()
                                   ? std::nullopt
                                   : std::optional<std::string>(derive_out));
    }
  } catch (const rhsim::ConfigError& e) {
    std::cerr << "rhsim: config error: " << e.what() << "\n";
    return rhsim::kExitConfigError;
  }
  return rhsim::kExitConfigError;
}
