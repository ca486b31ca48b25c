#include "dpmnl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dpmnl/accountant.hpp"
#include "dpmnl/csv.hpp"

namespace dpmnl {

namespace {

const std::map<std::string, std::string> kSchema = {
    {"T", "horizon (rounds per run)"},
    {"T0", "pure-exploration rounds, 1 <= T0 < T"},
    {"N", "catalog size per round"},
    {"K", "assortment size; sweepable comma list"},
    {"d", "context dimension; sweepable comma list"},
    {"replicates", "independent replicates per arm"},
    {"master_seed", "64-bit seed; everything derives from it"},
    {"output_dir", "directory for raw/summary/ledger/config outputs"},
    {"regime", "zcdp | eps-delta; sweepable comma list"},
    {"rho_total", "total zCDP budget; sweepable comma list"},
    {"mle_fraction", "fraction of the budget for PrivateMLE; sweepable"},
    {"epsilon1", "explicit MLE epsilon (eps-delta regime)"},
    {"delta1", "explicit MLE delta (eps-delta regime)"},
    {"epsilon2", "explicit Cov epsilon (eps-delta regime)"},
    {"delta2", "explicit Cov delta (eps-delta regime)"},
    {"delta_total", "target delta when deriving eps-delta budgets from rho"},
    {"conversion", "lemma | intext: zCDP->(eps,delta) conversion rule"},
    {"c_scale", "confidence-width multiplier c"},
    {"kappa", "curvature constant in the width"},
    {"q", "objective-perturbation split, in (0,1)"},
    {"d_mle_cap", "maximum number of PrivateMLE calls"},
    {"noise_off", "true/false: run the non-private baseline"},
    {"context_mode", "raw-gaussian | normalized"},
    {"revenue_mode", "uniform-one | vector"},
    {"revenues", "comma list of N revenues (revenue_mode=vector)"},
    {"theta_star_mode", "uniform-01 | fixed"},
    {"theta_star", "comma list of d values (theta_star_mode=fixed)"},
    {"replay_path", "replay CSV; switches the environment to replay mode"},
    {"subset_cap", "brute-force assortment search cap"},
    {"threads", "worker threads; 0 = auto"},
};

const char* kSweepableKeys[] = {"rho_total", "mle_fraction", "K", "d",
                                "regime"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(trim(part));
  return parts;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw std::runtime_error("config key '" + key + "': bad number '" +
                             value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw std::runtime_error("config key '" + key + "': bad integer '" +
                             value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::runtime_error("config key '" + key + "': bad boolean '" + value +
                           "'");
}

Vector to_vector(const std::string& key, const std::string& value) {
  const auto parts = split_list(value);
  Vector v(parts.size());
  for (size_t i = 0; i < parts.size(); ++i) v[i] = to_double(key, parts[i]);
  return v;
}

void check_key(const std::string& key, const std::string& origin,
               long line_no) {
  if (kSchema.count(key) == 0) {
    throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                             ": unknown config key '" + key + "'");
  }
}

}  // namespace

const std::map<std::string, std::string>& config_schema() { return kSchema; }

const std::string& FlatConfig::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) {
    throw std::runtime_error("missing config key '" + key + "'");
  }
  return it->second;
}

FlatConfig parse_config_text(const std::string& text,
                             const std::string& origin) {
  FlatConfig cfg;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    check_key(key, origin, line_no);
    cfg.values[key] = value;
  }
  return cfg;
}

FlatConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_overrides(FlatConfig& cfg,
                     const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("override must be key=value, got '" + item +
                               "'");
    }
    const std::string key = trim(item.substr(0, eq));
    check_key(key, "<override>", 0);
    cfg.values[key] = trim(item.substr(eq + 1));
  }
}

void ExperimentConfig::validate() const {
  if (arms.empty()) throw std::runtime_error("experiment has no arms");
  if (replicates < 1) throw std::runtime_error("replicates must be >= 1");
  for (const ArmSpec& arm : arms) {
    arm.env.validate();
    arm.policy.validate();
    if (arm.policy.horizon != arm.env.horizon) {
      throw std::runtime_error("arm '" + arm.label +
                               "': policy and env horizons differ");
    }
  }
}

namespace {

struct ArmKnobs {
  std::string regime;
  double rho_total = 0.0;
  double mle_fraction = 0.0;
  int k = 0;
  int d = 0;
};

ArmSpec build_arm(const FlatConfig& cfg, const ArmKnobs& knobs) {
  ArmSpec arm;

  EnvSpec& env = arm.env;
  env.dim = knobs.d;
  env.assortment_size = knobs.k;
  env.horizon = to_long("T", cfg.get("T"));
  env.num_items = cfg.has("N") ? static_cast<int>(to_long("N", cfg.get("N")))
                               : 100;
  if (cfg.has("context_mode")) {
    const std::string& mode = cfg.get("context_mode");
    if (mode == "raw-gaussian") {
      env.context_mode = ContextMode::kRawGaussian;
    } else if (mode == "normalized") {
      env.context_mode = ContextMode::kNormalized;
    } else {
      throw std::runtime_error("config key 'context_mode': unknown mode '" +
                               mode + "'");
    }
  }
  if (cfg.has("revenue_mode")) {
    const std::string& mode = cfg.get("revenue_mode");
    if (mode == "uniform-one") {
      env.revenue_mode = RevenueMode::kUniformOne;
    } else if (mode == "vector") {
      env.revenue_mode = RevenueMode::kVector;
      env.revenues_fixed = to_vector("revenues", cfg.get("revenues"));
    } else {
      throw std::runtime_error("config key 'revenue_mode': unknown mode '" +
                               mode + "'");
    }
  }
  if (cfg.has("theta_star_mode")) {
    const std::string& mode = cfg.get("theta_star_mode");
    if (mode == "uniform-01") {
      env.theta_mode = ThetaStarMode::kUniform01;
    } else if (mode == "fixed") {
      env.theta_mode = ThetaStarMode::kFixed;
      env.theta_fixed = to_vector("theta_star", cfg.get("theta_star"));
    } else {
      throw std::runtime_error(
          "config key 'theta_star_mode': unknown mode '" + mode + "'");
    }
  }
  if (cfg.has("replay_path")) env.replay_path = cfg.get("replay_path");

  PolicyConfig& pol = arm.policy;
  pol.horizon = env.horizon;
  pol.explore_rounds = to_long("T0", cfg.get("T0"));
  pol.num_items = env.num_items;
  pol.assortment_size = knobs.k;
  pol.dim = knobs.d;
  pol.mle_call_cap =
      cfg.has("d_mle_cap")
          ? static_cast<int>(to_long("d_mle_cap", cfg.get("d_mle_cap")))
          : 10;
  if (cfg.has("kappa")) pol.kappa = to_double("kappa", cfg.get("kappa"));
  if (cfg.has("q")) pol.q = to_double("q", cfg.get("q"));
  if (cfg.has("c_scale")) pol.c_scale = to_double("c_scale", cfg.get("c_scale"));
  if (cfg.has("subset_cap")) {
    pol.subset_cap = to_long("subset_cap", cfg.get("subset_cap"));
  }
  if (cfg.has("noise_off")) {
    pol.noise_off = to_bool("noise_off", cfg.get("noise_off"));
  }

  std::string label;
  if (pol.noise_off) {
    label = "noise-off";
  } else if (knobs.regime == "zcdp") {
    pol.regime = PrivacyRegime::kZcdp;
    BudgetSplit split{knobs.rho_total, knobs.mle_fraction};
    pol.rho1 = split.rho1();
    pol.rho2 = split.rho2();
    label = "zcdp_rho" + format_double(knobs.rho_total) + "_f" +
            format_double(knobs.mle_fraction);
  } else if (knobs.regime == "eps-delta") {
    pol.regime = PrivacyRegime::kEpsDelta;
    if (cfg.has("epsilon1")) {
      pol.eps1 = to_double("epsilon1", cfg.get("epsilon1"));
      pol.delta1 = to_double("delta1", cfg.get("delta1"));
      pol.eps2 = to_double("epsilon2", cfg.get("epsilon2"));
      pol.delta2 = to_double("delta2", cfg.get("delta2"));
      label = "epsdelta_e1" + format_double(pol.eps1);
    } else {
      // Match the zCDP budget: convert rho_total at delta_total, then split
      // epsilon by mle_fraction and delta evenly.
      const double delta_total =
          cfg.has("delta_total")
              ? to_double("delta_total", cfg.get("delta_total"))
              : 1.0 / (static_cast<double>(env.horizon) * env.horizon);
      double epsilon = 0.0;
      if (cfg.has("conversion") && cfg.get("conversion") == "intext") {
        epsilon = zcdp_to_epsilon_alt(knobs.rho_total,
                                      static_cast<double>(env.horizon));
      } else if (!cfg.has("conversion") || cfg.get("conversion") == "lemma") {
        epsilon = zcdp_to_eps_delta(knobs.rho_total, delta_total).epsilon;
      } else {
        throw std::runtime_error("config key 'conversion': unknown rule '" +
                                 cfg.get("conversion") + "'");
      }
      pol.eps1 = epsilon * knobs.mle_fraction;
      pol.eps2 = epsilon - pol.eps1;
      pol.delta1 = delta_total / 2.0;
      pol.delta2 = delta_total / 2.0;
      label = "epsdelta_rho" + format_double(knobs.rho_total) + "_f" +
              format_double(knobs.mle_fraction);
    }
  } else {
    throw std::runtime_error("config key 'regime': unknown regime '" +
                             knobs.regime + "'");
  }

  if (knobs.k != 10) label += "_K" + std::to_string(knobs.k);
  if (knobs.d != 5) label += "_d" + std::to_string(knobs.d);
  arm.label = label;
  return arm;
}

}  // namespace

ExperimentConfig build_experiment(const FlatConfig& cfg, bool allow_sweep) {
  for (const char* key : {"T", "T0"}) {
    if (!cfg.has(key)) {
      throw std::runtime_error(std::string("missing config key '") + key +
                               "'");
    }
  }

  ExperimentConfig exp;
  if (cfg.has("replicates")) {
    exp.replicates =
        static_cast<int>(to_long("replicates", cfg.get("replicates")));
  }
  if (cfg.has("master_seed")) {
    exp.master_seed = static_cast<std::uint64_t>(
        std::stoull(cfg.get("master_seed")));
  }
  if (cfg.has("output_dir")) exp.output_dir = cfg.get("output_dir");
  if (cfg.has("threads")) {
    exp.threads = static_cast<int>(to_long("threads", cfg.get("threads")));
  }

  const auto list_of = [&](const std::string& key,
                           const std::string& fallback) {
    std::vector<std::string> out = split_list(
        cfg.has(key) ? cfg.get(key) : fallback);
    if (!allow_sweep && out.size() > 1) {
      throw std::runtime_error("config key '" + key +
                               "' is a list; use the sweep subcommand");
    }
    return out;
  };

  const bool noise_off =
      cfg.has("noise_off") && to_bool("noise_off", cfg.get("noise_off"));
  const auto regimes = list_of("regime", "zcdp");
  const auto rhos = list_of("rho_total", noise_off ? "1" : "");
  const auto fractions = list_of("mle_fraction", noise_off ? "0.9" : "");
  const auto ks = list_of("K", "10");
  const auto ds = list_of("d", "5");

  for (const std::string& regime : regimes) {
    for (const std::string& rho : rhos) {
      for (const std::string& fraction : fractions) {
        for (const std::string& k : ks) {
          for (const std::string& d : ds) {
            ArmKnobs knobs;
            knobs.regime = regime;
            if (!noise_off) {
              if (rho.empty() &&
                  !(regime == "eps-delta" && cfg.has("epsilon1"))) {
                throw std::runtime_error("missing config key 'rho_total'");
              }
              if (!rho.empty()) knobs.rho_total = to_double("rho_total", rho);
              if (fraction.empty() &&
                  !(regime == "eps-delta" && cfg.has("epsilon1"))) {
                throw std::runtime_error("missing config key 'mle_fraction'");
              }
              if (!fraction.empty()) {
                knobs.mle_fraction = to_double("mle_fraction", fraction);
                if (knobs.mle_fraction <= 0.0 || knobs.mle_fraction >= 1.0) {
                  throw std::runtime_error(
                      "config key 'mle_fraction': must lie in (0,1)");
                }
              }
            }
            knobs.k = static_cast<int>(to_long("K", k));
            knobs.d = static_cast<int>(to_long("d", d));
            exp.arms.push_back(build_arm(cfg, knobs));
          }
        }
      }
    }
  }

  // Deduplicate labels (e.g. noise_off ignores the budget grid).
  std::vector<ArmSpec> unique;
  for (ArmSpec& arm : exp.arms) {
    const bool seen = std::any_of(
        unique.begin(), unique.end(),
        [&](const ArmSpec& u) { return u.label == arm.label; });
    if (!seen) unique.push_back(std::move(arm));
  }
  exp.arms = std::move(unique);

  exp.validate();
  return exp;
}

std::string snapshot_text(const FlatConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : cfg.values) {
    out += key + "=" + value + "\n";
  }
  return out;
}

}  // namespace dpmnl
