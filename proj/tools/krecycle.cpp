// krecycle: run / sweep / cost driver.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "krecycle/cli.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Recycled GMRES on a convection-diffusion time sequence"};
  app.require_subcommand(1);

  std::string config, out;
  auto add = [&](const char *name, const char *help) {
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config)");
    return sub;
  };
  auto *run = add("run", "solve one time sequence, write per-step CSV");
  auto *sweep = add("sweep", "restart x recycle_dim x svd_interval map");
  auto *cost = add("cost", "operation-count model and minimum SVD interval map");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return krecycle::cmd_run(config, out, std::cout, std::cerr);
  if (sweep->parsed()) return krecycle::cmd_sweep(config, out, std::cout, std::cerr);
  if (cost->parsed()) return krecycle::cmd_cost(config, out, std::cout, std::cerr);
  return 1;
}
