// Scenario runner and verification front-end.
//
// Subcommands:
//   simulate        run a benchmark scenario, write trajectory.csv + report.txt
//   check-smallgain evaluate the small-gain condition for a gain set
//   verify          run a randomized property suite (deterministic per seed)
//   compare-lemma   comparison-lemma suite with analytic spot checks

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include <safegain/cli.hpp>

int main(int argc, char** argv) {
  CLI::App app{"small-gain safety verification for high-relative-degree barrier chains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string suite;
  double dt_flag = 0.0, t_end_flag = 0.0;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* config_opt = cmd->add_option("--config", config_path, "scenario config file (JSON)");
    if (config_required) config_opt->required();
    cmd->add_option("--dt", dt_flag, "integration step override");
    cmd->add_option("--t-end", t_end_flag, "horizon override");
    cmd->add_option("--seed", seed_flag, "seed for randomized suites");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run a benchmark scenario");
  add_common(simulate, true);
  simulate->add_option("--out", out_dir, "output directory");

  CLI::App* smallgain = app.add_subcommand("check-smallgain", "check the small-gain condition");
  add_common(smallgain, false);

  CLI::App* verify = app.add_subcommand("verify", "run a randomized property suite");
  verify->add_option("suite", suite, "margin-form | comparison | invariance | weak-ineq")
      ->required();
  add_common(verify, false);

  CLI::App* compare = app.add_subcommand("compare-lemma", "comparison-lemma property suite");
  add_common(compare, false);

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  safegain::CliOverrides overrides;
  if (active->count("--dt") > 0) overrides.dt = dt_flag;
  if (active->count("--t-end") > 0) overrides.t_end = t_end_flag;
  if (active->count("--seed") > 0) overrides.seed = seed_flag;

  if (simulate->parsed()) return safegain::cmd_simulate(config_path, out_dir, overrides);
  if (smallgain->parsed()) return safegain::cmd_check_smallgain(config_path);
  if (verify->parsed()) return safegain::cmd_verify(suite, config_path, overrides);
  if (compare->parsed()) return safegain::cmd_compare_lemma(config_path, overrides);
  return safegain::kExitError;
}
