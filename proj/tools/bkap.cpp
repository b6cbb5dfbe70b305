// Batch experiment runner for the bipolar kinetic transport library.
//
//   bkap run [--preset NAME] [--config FILE] [--set key=value ...] [--out DIR]
//   bkap validate [--preset NAME] [--config FILE] [--set key=value ...]
//   bkap list-presets
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure.
// BKAP_THREADS caps worker parallelism (default: available cores).

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bkap/run_config.hpp"
#include "bkap/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitSolverFailure = 3;

struct ConfigFlags {
  std::string preset, config_file, out_dir;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_out) {
  cmd->add_option("--preset", f.preset, "named experiment preset (see list-presets)");
  cmd->add_option("--config", f.config_file, "flat key = value configuration file");
  cmd->add_option("--set", f.sets, "override a single key, e.g. --set solver.dt=1e-6")
      ->take_all();
  if (with_out)
    cmd->add_option("--out", f.out_dir, "output directory (overrides run.output_dir)");
}

std::optional<std::string> opt_of(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

bkap::RunConfig assemble(const ConfigFlags& f) {
  return bkap::assemble_config(opt_of(f.preset), opt_of(f.config_file), f.sets,
                               opt_of(f.out_dir));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bipolar kinetic transport experiment runner"};
  app.require_subcommand(1);

  ConfigFlags run_flags, validate_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment and write CSV artifacts");
  add_config_flags(run_cmd, run_flags, /*with_out=*/true);
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "resolve and validate a configuration without running");
  add_config_flags(validate_cmd, validate_flags, /*with_out=*/true);
  CLI::App* list_cmd = app.add_subcommand("list-presets", "list the named experiment presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help/version or the parse error
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  if (list_cmd->parsed()) {
    for (const std::string& name : bkap::preset_names())
      std::cout << name << "  " << bkap::preset_description(bkap::experiment_from_token(name))
                << "\n";
    return kExitOk;
  }

  if (validate_cmd->parsed()) {
    try {
      const bkap::RunConfig cfg = assemble(validate_flags);
      std::cout << bkap::emit(cfg) << "configuration valid\n";
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return kExitConfigError;
    }
  }

  // run
  bkap::RunConfig cfg;
  try {
    cfg = assemble(run_flags);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    const bkap::RunResult res = bkap::run_experiment(cfg);
    std::cout << res.summary;
    for (const std::string& name : res.files)
      std::cout << "wrote " << cfg.output_dir << "/" << name << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  }
}
