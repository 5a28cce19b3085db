#include <CLI11.hpp>

#include "huca/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multi-agent charging control for a workplace "
               "bidirectional EV station"};
  app.require_subcommand(1);

  huca::cli::CliOptions opts;
  std::uint64_t seed_flag = 0;
  int piles_flag = 0, episodes_flag = 0, synth_days_flag = 0, eval_days_flag = 0;
  double rho_flag = 0.0;
  std::string scenario_flag, ablation_flag, load_flag, price_flag, run_flag,
      manifest_flag;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--seed", seed_flag, "master seed")
        ->each([&](const std::string&) { opts.seed = seed_flag; });
    cmd->add_option("--scenario", scenario_flag, "certain|uncertain")
        ->check(CLI::IsMember({"certain", "uncertain"}))
        ->each([&](const std::string& v) { opts.scenario = v; });
    cmd->add_option("--piles", piles_flag, "number of charging piles")
        ->each([&](const std::string&) { opts.piles = piles_flag; });
    cmd->add_option("--rho", rho_flag, "uncertainty coefficient")
        ->each([&](const std::string&) { opts.rho = rho_flag; });
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--load-csv", load_flag, "building load trace CSV")
        ->each([&](const std::string& v) { opts.load_csv = v; });
    cmd->add_option("--price-csv", price_flag, "price trace CSV")
        ->each([&](const std::string& v) { opts.price_csv = v; });
    cmd->add_option("--synthetic-days", synth_days_flag,
                    "days of synthetic traces when no CSV is given")
        ->each([&](const std::string&) { opts.synthetic_days = synth_days_flag; });
    cmd->add_option("--eval-days", eval_days_flag, "evaluation horizon in days")
        ->each([&](const std::string&) { opts.eval_days = eval_days_flag; });
    cmd->add_option("--from-manifest", manifest_flag,
                    "reproduce the configuration of a previous run")
        ->each([&](const std::string& v) { opts.from_manifest = v; });
  };

  CLI::App* train = app.add_subcommand("train", "train a policy");
  add_common(train);
  train->add_option("--episodes", episodes_flag, "training episodes")
      ->each([&](const std::string&) { opts.episodes = episodes_flag; });
  train->add_option("--ablation", ablation_flag, "full|no-ca|no-high|no-either")
      ->check(CLI::IsMember({"full", "no-ca", "no-high", "no-either"}))
      ->each([&](const std::string& v) { opts.ablation = v; });

  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy");
  add_common(eval);
  eval->add_option("--run", run_flag, "run directory holding the checkpoints")
      ->each([&](const std::string& v) { opts.run_dir = v; });
  eval->add_option("--policy", opts.policy, "trained|random|max-charge")
      ->check(CLI::IsMember({"trained", "random", "max-charge"}));

  CLI::App* ablate =
      app.add_subcommand("ablate", "train and compare the four ablations");
  add_common(ablate);
  ablate->add_option("--episodes", episodes_flag, "training episodes")
      ->each([&](const std::string&) { opts.episodes = episodes_flag; });

  CLI::App* oracle =
      app.add_subcommand("oracle", "price-greedy charging-only schedule");
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
  }

  return huca::cli::run_command(app.get_subcommands().front()->get_name(), opts);
}
