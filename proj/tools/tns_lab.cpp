#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tns/experiments.hpp"
#include "tns/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tridiagonal Navier-Stokes / Euler model lab"};
  app.require_subcommand(1);

  tns::CommandOptions opt;
  std::string config, out_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "single run: trajectory CSV and JSON summary");
  auto* sweep = app.add_subcommand("sweep", "(alpha, beta) regime map");
  auto* refine = app.add_subcommand("refine", "N-refinement scaling table");
  auto* probe = app.add_subcommand("attractor-probe", "post-burn-in positivity of random ensembles");
  auto* euler = app.add_subcommand("euler", "inviscid run with conservation and monotonicity report");
  auto* verify = app.add_subcommand("verify", "invariant suite");
  auto* examples = app.add_subcommand("examples", "toy evolutionary systems: attraction radii CSVs");
  for (auto* s : {simulate, sweep, refine, probe, euler}) add_common(s, true);
  for (auto* s : {verify, examples}) add_common(s, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tns::exit_config;
  }

  if (!config.empty()) opt.config = config;
  opt.out_dir = out_dir;
  opt.threads = threads;
  for (auto* s : app.get_subcommands()) {
    if (s->count("--seed") > 0) opt.seed = seed;
  }

  if (simulate->parsed()) return tns::cmd_simulate(opt, std::cerr);
  if (sweep->parsed()) return tns::cmd_sweep(opt, std::cerr);
  if (refine->parsed()) return tns::cmd_refine(opt, std::cerr);
  if (probe->parsed()) return tns::cmd_attractor_probe(opt, std::cerr);
  if (euler->parsed()) return tns::cmd_euler(opt, std::cerr);
  if (verify->parsed()) return tns::cmd_verify(opt, std::cout, std::cerr);
  if (examples->parsed()) return tns::cmd_examples(opt, std::cerr);
  return tns::exit_config;
}
