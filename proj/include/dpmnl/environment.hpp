#pragma once

#include <string>
#include <vector>

#include "dpmnl/mnl.hpp"
#include "dpmnl/rng.hpp"

namespace dpmnl {

enum class ContextMode { kRawGaussian, kNormalized };
enum class RevenueMode { kUniformOne, kVector };
enum class ThetaStarMode { kUniform01, kFixed };

struct EnvSpec {
  int num_items = 0;       // N
  int dim = 0;             // d
  int assortment_size = 0; // K
  long horizon = 0;        // T
  ContextMode context_mode = ContextMode::kRawGaussian;
  RevenueMode revenue_mode = RevenueMode::kUniformOne;
  ThetaStarMode theta_mode = ThetaStarMode::kUniform01;
  Vector theta_fixed;      // used when theta_mode == kFixed
  Vector revenues_fixed;   // used when revenue_mode == kVector
  std::string replay_path; // nonempty switches to replay mode

  void validate() const;
};

// One block of a replay log: the items shown in one historical round.
struct ReplayBlock {
  std::vector<Vector> items;
  Vector revenues;
  std::vector<int> chosen;  // per-item 0/1 flags; may be empty
};

struct ReplayLog {
  int dim = 0;
  bool has_outcomes = false;  // true when the CSV carried a `chosen` column
  std::vector<ReplayBlock> blocks;
};

// Parses the replay CSV. Expected header: t,item_id,f1..fd,revenue with an
// optional trailing `chosen` column; rows are grouped by equal t values.
// Parse errors name the offending line.
ReplayLog load_replay_csv(const std::string& path);

// Synthetic generator or with-replacement replay of logged rounds. Draws
// theta* once at construction; rounds are independent of any policy action,
// so two environments built from equal streams yield identical rounds.
class Environment {
 public:
  Environment(const EnvSpec& spec, const RngStream& stream);
  Environment(const EnvSpec& spec, ReplayLog replay, const RngStream& stream);

  RoundContext next_round();
  const ModelParameter& theta_star() const { return theta_star_; }

 private:
  EnvSpec spec_;
  ReplayLog replay_;
  RngStream stream_;
  ModelParameter theta_star_;
  long t_ = 0;
};

}  // namespace dpmnl
