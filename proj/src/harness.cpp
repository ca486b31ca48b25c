#include "dpmnl/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "dpmnl/csv.hpp"
#include "dpmnl/policy.hpp"

namespace dpmnl {

double RunTrace::final_cum_regret() const {
  return std::accumulate(instant_regret.begin(), instant_regret.end(), 0.0);
}

const RunTrace& ResultsTable::run(int arm, int replicate) const {
  for (const RunTrace& r : runs) {
    if (r.arm_index == arm && r.replicate == replicate) return r;
  }
  throw std::out_of_range("no such (arm, replicate) trace");
}

std::pair<double, double> ResultsTable::final_regret_stats(int arm) const {
  std::vector<double> finals;
  for (const RunTrace& r : runs) {
    if (r.arm_index == arm && r.error.empty()) {
      finals.push_back(r.final_cum_regret());
    }
  }
  if (finals.empty()) {
    throw std::runtime_error("arm " + std::to_string(arm) +
                             " has no completed replicates");
  }
  const double n = static_cast<double>(finals.size());
  const double mean = std::accumulate(finals.begin(), finals.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : finals) ss += (v - mean) * (v - mean);
  const double se = finals.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean, se};
}

namespace {

int worker_count(const ExperimentConfig& cfg) {
  int threads = cfg.threads;
  if (const char* env = std::getenv("DPMNL_THREADS")) {
    threads = std::atoi(env);
  }
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  return threads;
}

RunTrace execute_one(const ExperimentConfig& cfg, int arm_index,
                     int replicate) {
  const ArmSpec& arm = cfg.arms[arm_index];
  RunTrace trace;
  trace.arm_index = arm_index;
  trace.replicate = replicate;

  try {
    const RngStream master(cfg.master_seed);
    // Environment and choice streams are shared across arms (paired seeds);
    // everything the policy draws is arm-specific.
    RngStream env_stream =
        master.derive("env", static_cast<std::uint64_t>(replicate));
    RngStream choice_stream =
        master.derive("choice", static_cast<std::uint64_t>(replicate));
    RngStream policy_stream =
        master.derive("policy", static_cast<std::uint64_t>(arm_index),
                      static_cast<std::uint64_t>(replicate));

    Environment env =
        arm.env.replay_path.empty()
            ? Environment(arm.env, env_stream)
            : Environment(arm.env, load_replay_csv(arm.env.replay_path),
                          env_stream);

    PrivacyLedger ledger;
    DpmnlPolicy policy(arm.policy, policy_stream, &ledger);
    const ModelParameter& truth = env.theta_star();
    const long horizon = arm.env.horizon;
    trace.instant_regret.reserve(horizon);

    for (long t = 1; t <= horizon; ++t) {
      RoundContext ctx = env.next_round();
      Assortment offered = policy.act(ctx);
      Vector probs = choice_probabilities(ctx, offered, truth);
      ChoiceOutcome outcome = sample_choice(probs, choice_stream);
      policy.update(ctx, offered, outcome);

      Vector oracle_z(ctx.num_items());
      for (int i = 0; i < ctx.num_items(); ++i) {
        oracle_z[i] = ctx.items[i].dot(truth.theta);
      }
      Assortment best =
          best_assortment(oracle_z, ctx.revenues, arm.policy.assortment_size,
                          AssortmentMode::kAuto, arm.policy.subset_cap);
      trace.instant_regret.push_back(expected_revenue(ctx, best, truth) -
                                     expected_revenue(ctx, offered, truth));
    }

    trace.ledger_entries = ledger.entries();
    trace.ledger_total = ledger.total();
    trace.ledger_total_delta = ledger.total_delta();
    trace.mle_calls = policy.mle_calls();
    trace.mle_failures = policy.mle_failures();
    trace.pd_failures = policy.tree().pd_failures();
  } catch (const std::exception& err) {
    trace.instant_regret.clear();
    trace.error = err.what();
  }
  return trace;
}

}  // namespace

ResultsTable run(const ExperimentConfig& cfg) {
  cfg.validate();

  ResultsTable table;
  table.horizon = cfg.arms.front().env.horizon;
  for (const ArmSpec& arm : cfg.arms) table.arm_labels.push_back(arm.label);

  const int total = static_cast<int>(cfg.arms.size()) * cfg.replicates;
  table.runs.resize(total);

  std::atomic<int> next_task{0};
  auto work = [&]() {
    while (true) {
      const int task = next_task.fetch_add(1);
      if (task >= total) return;
      const int arm = task / cfg.replicates;
      const int replicate = task % cfg.replicates;
      table.runs[task] = execute_one(cfg, arm, replicate);
    }
  };

  const int threads = std::min(worker_count(cfg), total);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return table;
}

void summarize_and_emit(const ExperimentConfig& cfg,
                        const ResultsTable& results,
                        const std::string& snapshot) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " +
                             dir.string() + ": " + ec.message());
  }

  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + (dir / name).string());
    }
    return out;
  };

  {
    std::ofstream raw = open("raw.csv");
    raw << "arm,replicate,t,instant_regret,cum_regret\n";
    for (const RunTrace& trace : results.runs) {
      if (!trace.error.empty()) continue;
      double cum = 0.0;
      for (long t = 0; t < static_cast<long>(trace.instant_regret.size());
           ++t) {
        const double instant = trace.instant_regret[t];
        if (instant < -1e-12) {
          throw std::runtime_error(
              "negative instant regret (oracle violated) in arm " +
              results.arm_labels[trace.arm_index]);
        }
        cum += instant;
        raw << csv_escape(results.arm_labels[trace.arm_index]) << ','
            << trace.replicate << ',' << (t + 1) << ','
            << format_double(instant) << ',' << format_double(cum) << '\n';
      }
    }
  }

  {
    std::ofstream summary = open("summary.csv");
    summary << "arm,t,mean,lo,hi\n";
    const int arms = static_cast<int>(results.arm_labels.size());
    for (int arm = 0; arm < arms; ++arm) {
      std::vector<const RunTrace*> traces;
      for (const RunTrace& trace : results.runs) {
        if (trace.arm_index == arm && trace.error.empty()) {
          traces.push_back(&trace);
        }
      }
      if (traces.empty()) continue;
      const double n = static_cast<double>(traces.size());
      std::vector<double> cums(traces.size(), 0.0);
      for (long t = 0; t < results.horizon; ++t) {
        double mean = 0.0;
        for (size_t i = 0; i < traces.size(); ++i) {
          cums[i] += traces[i]->instant_regret[t];
          mean += cums[i];
        }
        mean /= n;
        double ss = 0.0;
        for (double c : cums) ss += (c - mean) * (c - mean);
        const double se =
            traces.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        summary << csv_escape(results.arm_labels[arm]) << ',' << (t + 1)
                << ',' << format_double(mean) << ','
                << format_double(mean - 1.96 * se) << ','
                << format_double(mean + 1.96 * se) << '\n';
      }
    }
  }

  {
    std::ofstream ledger = open("ledger.csv");
    ledger << "event,mechanism,rho_or_eps,delta,cumulative\n";
    for (const RunTrace& trace : results.runs) {
      const std::string prefix = results.arm_labels[trace.arm_index] +
                                 "|rep=" + std::to_string(trace.replicate) +
                                 "|";
      if (!trace.error.empty()) {
        ledger << csv_escape(prefix + "replicate_abort: " + trace.error)
               << ",error,0,0,0\n";
        continue;
      }
      for (const auto& entry : trace.ledger_entries) {
        ledger << csv_escape(prefix + entry.event) << ','
               << csv_escape(entry.mechanism) << ','
               << format_double(entry.rho_or_eps) << ','
               << format_double(entry.delta) << ','
               << format_double(entry.cumulative) << '\n';
      }
    }
  }

  {
    std::ofstream snap = open("config.snapshot");
    snap << snapshot;
  }
}

ModelParameter fit_ground_truth(const std::string& replay_csv_path) {
  const ReplayLog replay = load_replay_csv(replay_csv_path);
  if (!replay.has_outcomes) {
    throw std::runtime_error(replay_csv_path +
                             ": fitting needs a `chosen` column");
  }

  InteractionLog log;
  for (const ReplayBlock& block : replay.blocks) {
    MnlRecord rec;
    rec.offered = block.items;
    rec.chosen_slot = 0;
    for (size_t i = 0; i < block.chosen.size(); ++i) {
      if (block.chosen[i] != 0) {
        rec.chosen_slot = static_cast<int>(i) + 1;
        break;
      }
    }
    log.records.push_back(std::move(rec));
  }

  const Vector start = Vector::Zero(replay.dim);
  MleResult result =
      solve_perturbed_mle_with_noise(log, 1e-6, Vector::Zero(replay.dim),
                                     &start);
  if (!result.converged) {
    throw std::runtime_error(
        "ground-truth fit did not converge (residual " +
        format_double(result.grad_residual_norm) + ")");
  }
  return ModelParameter{result.theta_hat};
}

}  // namespace dpmnl
