#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "qbbgky/io.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qbbgky::ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct SubcommandArgs {
  std::string config_path;
  std::string out_override;
};

qbbgky::RunConfig load(const SubcommandArgs& args) {
  qbbgky::RunConfig config = qbbgky::parse_config(read_file(args.config_path));
  if (!args.out_override.empty()) config.output_dir = args.out_override;
  return config;
}

void add_common(CLI::App* cmd, SubcommandArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON configuration file")->required();
  cmd->add_option("-o,--out", args.out_override, "output directory (overrides config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qbbgky: hierarchy evolution of bosonic reduced density matrices"};
  app.require_subcommand(1);

  SubcommandArgs derive_args, run_args, oracle_args, compare_args, observe_args;
  CLI::App* cmd_derive =
      app.add_subcommand("derive", "compile the evolution equations and write programs.json");
  add_common(cmd_derive, derive_args);
  CLI::App* cmd_run =
      app.add_subcommand("run", "integrate the hierarchy and write snapshots and observables");
  add_common(cmd_run, run_args);
  CLI::App* cmd_oracle =
      app.add_subcommand("oracle", "evolve the truncated Fock-space density matrix exactly");
  add_common(cmd_oracle, oracle_args);
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "run hierarchy and oracle side by side and diff them");
  add_common(cmd_compare, compare_args);
  CLI::App* cmd_observe =
      app.add_subcommand("observe", "recompute observables from stored snapshots");
  add_common(cmd_observe, observe_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_derive->parsed()) {
      qbbgky::derive(load(derive_args));
      std::cout << "wrote programs.json\n";
    } else if (cmd_run->parsed()) {
      qbbgky::RunConfig config = load(run_args);
      qbbgky::RunResult result = qbbgky::run(config);
      std::cout << "run complete: " << result.sample_count << " samples, final t = "
                << result.final_time << "\n";
    } else if (cmd_oracle->parsed()) {
      qbbgky::RunConfig config = load(oracle_args);
      qbbgky::RunResult result = qbbgky::run_oracle(config);
      std::cout << "oracle complete: " << result.sample_count << " samples, final t = "
                << result.final_time << "\n";
    } else if (cmd_compare->parsed()) {
      qbbgky::RunConfig config = load(compare_args);
      qbbgky::CompareResult result = qbbgky::compare(config);
      std::cout << "compare complete: max distance " << result.max_distance << " over "
                << result.sample_count << " samples\n";
    } else if (cmd_observe->parsed()) {
      qbbgky::observe(load(observe_args));
      std::cout << "observables written\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return qbbgky::exit_code_for(err);
  }
  return qbbgky::kExitOk;
}
