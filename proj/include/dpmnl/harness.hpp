#pragma once

#include <string>
#include <vector>

#include "dpmnl/accountant.hpp"
#include "dpmnl/config.hpp"
#include "dpmnl/environment.hpp"

namespace dpmnl {

// One (arm, replicate) trajectory.
struct RunTrace {
  int arm_index = 0;
  int replicate = 0;
  std::vector<double> instant_regret;  // length T; empty if the run aborted
  std::vector<PrivacyLedger::Entry> ledger_entries;
  double ledger_total = 0.0;
  double ledger_total_delta = 0.0;
  int mle_calls = 0;
  int mle_failures = 0;
  int pd_failures = 0;
  std::string error;  // nonempty if the replicate aborted

  double final_cum_regret() const;
};

struct ResultsTable {
  std::vector<std::string> arm_labels;
  long horizon = 0;
  std::vector<RunTrace> runs;  // ordered by (arm, replicate)

  const RunTrace& run(int arm, int replicate) const;
  // Mean and standard error of the final cumulative regret over the
  // non-aborted replicates of one arm.
  std::pair<double, double> final_regret_stats(int arm) const;
};

// Executes arms x replicates (parallel work pool; one policy state and RNG
// family per worker task). Environments and choice draws are derived
// per-replicate only, so arms are paired; policy randomness is per-arm.
ResultsTable run(const ExperimentConfig& cfg);

// Writes raw.csv, summary.csv, ledger.csv and config.snapshot into
// output_dir (created if missing). `snapshot` is the resolved flat config.
void summarize_and_emit(const ExperimentConfig& cfg,
                        const ResultsTable& results,
                        const std::string& snapshot);

// Non-private MLE (tiny ridge, zero noise) on a replay log with outcomes;
// the returned parameter seeds semi-synthetic replays as theta_star.
ModelParameter fit_ground_truth(const std::string& replay_csv_path);

}  // namespace dpmnl
