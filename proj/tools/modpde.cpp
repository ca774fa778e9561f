#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modpde/cli.hpp"

int main(int argc, char** argv)
{
  CLI::App app{"modpde: modulated dispersive PDE experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed_override;
  app.add_option("--config", config_file, "experiment config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides [run] out)");
  app.add_option("--threads", threads, "worker threads (falls back to MODPDE_THREADS, then [run] threads)")
      ->check(CLI::Range(1u, 4096u));
  app.add_option("--seed-override", seed_override, "replace the root seed from the config");

  for (const char* name : {"simulate", "converge", "irregularity", "probe", "regime"})
    app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : modpde::kExitConfig;
  }

  modpde::ExperimentConfig cfg;
  try {
    cfg = modpde::load_config(config_file);
  } catch (const modpde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return modpde::kExitConfig;
  }
  if (out_dir)
    cfg.out = *out_dir;
  if (seed_override)
    cfg.seed = *seed_override;
  if (threads)
    cfg.threads = *threads;
  else if (const unsigned env = modpde::threads_from_env(std::getenv("MODPDE_THREADS")))
    cfg.threads = env;

  const std::string cmd = app.get_subcommands().front()->get_name();
  return modpde::run_command(cmd, cfg, std::cout, std::cerr);
}
