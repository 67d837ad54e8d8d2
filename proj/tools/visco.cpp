// visco: run one experiment from a JSON config and write its artifacts.
//
//   visco <command> --config PATH [--out DIR] [--seed N] [--threads N] [--tolerance-scale X]
//
// Exit status 0 when every check passes, 1 when a check fails, 2 on any
// operational error (bad usage, invalid config, I/O).

#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "visco/commands.hpp"
#include "visco/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Viscoelastic wave experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_scale;
  int threads = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Run the solver; write snapshots and the energy trace"},
      {"verify-fsp", "Check that nothing enters the shrinking cone"},
      {"check-identities", "Verify the stress identities on random polynomials"},
      {"check-carleman", "Probe the weighted estimates numerically"},
      {"identify-speed", "Estimate the shear speed from a simulated wavefield"},
      {"uniqueness-exp", "Compare residuals of two materials on one wavefield"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Config file (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory; overrides output.dir");
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--threads", threads, "Worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--tolerance-scale", tol_scale, "Multiplies every acceptance tolerance")
        ->check(CLI::PositiveNumber);
  }

  if (argc > 1 && argv[1][0] != '-') {
    const std::string first = argv[1];
    bool known = false;
    for (const auto& c : commands) known = known || c.first == first;
    if (!known) {
      std::cerr << "error: unknown command '" << first << "'\n\n" << app.help();
      return visco::OperationalError;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return visco::OperationalError;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  visco::RunConfig cfg;
  try {
    cfg = visco::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return visco::OperationalError;
  }
  if (seed) cfg.seed = *seed;
  if (tol_scale) cfg.tolerance_scale = *tol_scale;
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  const auto r = visco::dispatch(cmd, cfg, out_dir.empty() ? cfg.output.dir : out_dir);
  (r.exit_code == visco::OperationalError ? std::cerr : std::cout) << r.message;
  return r.exit_code;
}
