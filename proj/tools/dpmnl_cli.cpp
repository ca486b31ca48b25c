#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpmnl/config.hpp"
#include "dpmnl/csv.hpp"
#include "dpmnl/harness.hpp"

namespace {

dpmnl::FlatConfig load_with_overrides(const std::string& path,
                                      const std::vector<std::string>& sets) {
  dpmnl::FlatConfig cfg = dpmnl::parse_config_file(path);
  dpmnl::apply_overrides(cfg, sets);
  return cfg;
}

int run_experiment(const std::string& path,
                   const std::vector<std::string>& sets, bool sweep) {
  const dpmnl::FlatConfig flat = load_with_overrides(path, sets);
  const dpmnl::ExperimentConfig cfg = dpmnl::build_experiment(flat, sweep);

  std::cerr << "running " << cfg.arms.size() << " arm(s) x "
            << cfg.replicates << " replicate(s), T = "
            << cfg.arms.front().env.horizon << "\n";
  const dpmnl::ResultsTable results = dpmnl::run(cfg);

  int aborted = 0;
  for (const auto& trace : results.runs) {
    if (!trace.error.empty()) {
      ++aborted;
      std::cerr << "replicate aborted (" << results.arm_labels[trace.arm_index]
                << ", rep " << trace.replicate << "): " << trace.error << "\n";
    }
  }

  dpmnl::summarize_and_emit(cfg, results, dpmnl::snapshot_text(flat));
  for (size_t arm = 0; arm < results.arm_labels.size(); ++arm) {
    const auto [mean, se] = results.final_regret_stats(static_cast<int>(arm));
    std::cout << results.arm_labels[arm] << ": final regret "
              << dpmnl::format_double(mean) << " +/- "
              << dpmnl::format_double(se) << " (se)\n";
  }
  std::cout << "wrote raw.csv, summary.csv, ledger.csv, config.snapshot to "
            << cfg.output_dir << "\n";
  return aborted == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DPMNL: privacy-preserving MNL bandit simulation harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;

  CLI::App* cmd_run = app.add_subcommand(
      "run", "run the experiment described by a config file");
  cmd_run->add_option("config", config_path, "flat key=value config file")
      ->required();
  cmd_run->add_option("--set", sets, "override a config key (key=value)");

  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "expand comma-listed budgets/allocations into an arm grid");
  cmd_sweep->add_option("config", config_path, "flat key=value config file")
      ->required();
  cmd_sweep->add_option("--set", sets, "override a config key (key=value)");

  CLI::App* cmd_validate =
      app.add_subcommand("validate", "check a config file and exit");
  cmd_validate->add_option("config", config_path, "flat key=value config file")
      ->required();
  cmd_validate->add_option("--set", sets, "override a config key (key=value)");

  std::string replay_path;
  CLI::App* cmd_fit = app.add_subcommand(
      "fit-ground-truth",
      "fit a non-private MLE on a replay CSV and print theta_star");
  cmd_fit->add_option("csv", replay_path, "replay CSV with a chosen column")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      return run_experiment(config_path, sets, /*sweep=*/false);
    }
    if (cmd_sweep->parsed()) {
      return run_experiment(config_path, sets, /*sweep=*/true);
    }
    if (cmd_validate->parsed()) {
      const dpmnl::FlatConfig flat = load_with_overrides(config_path, sets);
      dpmnl::build_experiment(flat, /*allow_sweep=*/true);
      std::cout << "config ok\n";
      return 0;
    }
    if (cmd_fit->parsed()) {
      const dpmnl::ModelParameter theta =
          dpmnl::fit_ground_truth(replay_path);
      std::string line = "theta_star=";
      for (int i = 0; i < theta.theta.size(); ++i) {
        if (i) line += ",";
        line += dpmnl::format_double(theta.theta[i]);
      }
      std::cout << line << "\n";
      return 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
