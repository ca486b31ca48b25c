#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dpmnl/environment.hpp"
#include "dpmnl/policy.hpp"

namespace dpmnl {

// One comparison arm: a policy configuration plus the environment it runs
// against (arms usually share the environment; sweeps over K or d do not).
struct ArmSpec {
  std::string label;
  EnvSpec env;
  PolicyConfig policy;
};

struct ExperimentConfig {
  std::vector<ArmSpec> arms;
  int replicates = 1;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  int threads = 0;  // 0 = auto; DPMNL_THREADS overrides

  void validate() const;
};

// Flat key=value configuration text ('#' starts a comment). Values may be
// comma lists for the sweepable keys; `run` requires scalars everywhere.
struct FlatConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::string& get(const std::string& key) const;
};

// Parses and schema-checks; unknown keys raise an error naming the key.
FlatConfig parse_config_text(const std::string& text,
                             const std::string& origin = "<config>");
FlatConfig parse_config_file(const std::string& path);

// Applies `key=value` override strings (same schema check).
void apply_overrides(FlatConfig& cfg,
                     const std::vector<std::string>& overrides);

// Builds the experiment. With `allow_sweep`, comma lists in rho_total,
// mle_fraction, K, d and regime expand into a cartesian grid of arms;
// otherwise any list is an error.
ExperimentConfig build_experiment(const FlatConfig& cfg, bool allow_sweep);

// Canonical flat text for config.snapshot; parseable by run/sweep again.
std::string snapshot_text(const FlatConfig& cfg);

// The documented schema (key -> help line), for `validate` and the README.
const std::map<std::string, std::string>& config_schema();

}  // namespace dpmnl
