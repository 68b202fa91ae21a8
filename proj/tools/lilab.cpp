#include <iostream>

#include <CLI11.hpp>

#include "lilab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lilab: limit theorems for stationary processes, by simulation and exact checks"};
  app.require_subcommand(1);
  lilab::CliOptions opt;
  std::string config, out;
  std::uint64_t seed = 0;
  unsigned workers = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "master seed (overrides the config)");
    cmd->add_option("--workers", workers, "worker threads (default: LILAB_WORKERS or 1)")->check(CLI::PositiveNumber);
    cmd->add_flag("--strict-sums", opt.strict_sums, "reduce floating sums in path order");
  };
  auto* check = app.add_subcommand("check", "run condition checks");
  check->add_option("--config", config, "experiment config (JSON)")->required();
  add_common(check);
  auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo engine and write reports");
  simulate->add_option("--config", config, "experiment config (JSON)")->required();
  add_common(simulate);
  auto* verify = app.add_subcommand("verify", "run a named acceptance suite");
  verify->add_option("--suite", opt.suite, "suite name (trivial, lil-scalar, ac-1 .. ac-12, all)")->required();
  verify->add_option("--config", config, "unused; accepted for symmetry");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lilab::kExitUsage;
  }
  if (!config.empty()) opt.config = config;
  if (!out.empty()) opt.out = out;
  for (auto* cmd : {check, simulate, verify}) {
    if (cmd->count("--seed")) opt.seed = seed;
    if (cmd->count("--workers")) opt.workers = workers;
  }
  try {
    if (*check) return lilab::cmd_check(opt, std::cout, std::cerr);
    if (*simulate) return lilab::cmd_simulate(opt, std::cout, std::cerr);
    return lilab::cmd_verify(opt, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lilab::kExitRuntime;
  }
}
