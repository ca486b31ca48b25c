#pragma once

#include <optional>

#include "dpmnl/accountant.hpp"
#include "dpmnl/mnl.hpp"
#include "dpmnl/private_cov.hpp"
#include "dpmnl/private_mle.hpp"
#include "dpmnl/rng.hpp"

namespace dpmnl {

enum class PrivacyRegime { kZcdp, kEpsDelta };

struct PolicyConfig {
  long horizon = 0;       // T
  long explore_rounds = 0;  // T0, pure exploration length; must satisfy T0 < T
  int num_items = 0;      // N
  int assortment_size = 0;  // K
  int dim = 0;            // d
  int mle_call_cap = 1;   // D_MLE
  double kappa = 1.0;
  double q = 0.5;
  double c_scale = 1e-4;
  PrivacyRegime regime = PrivacyRegime::kZcdp;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double eps1 = 0.0, delta1 = 0.0;
  double eps2 = 0.0, delta2 = 0.0;
  bool noise_off = false;
  long subset_cap = kDefaultSubsetCap;
  // Overrides the Lemma-based lambda (mandatory at d = 1 with noise on).
  std::optional<double> lambda_override;
  // Test hook: play greedily under this fixed parameter from round 1, with
  // no exploration and no MLE refreshes. Requires noise_off.
  std::optional<Vector> oracle_theta;

  int hessian_rank() const;
  void validate() const;
};

// Pure-exploration length from the regret analysis:
//   T0 = ceil((1/K)*((C1*sqrt(d) + C2*sqrt(2 ln T))/sigma0)^2
//             + 2*C_{rho1,T}/(K*sigma0)),
// with C_{rho1,T} the squared MLE-error bracket. The paper leaves C1, C2
// unstated; both default to 1 and experiments usually set T0 directly.
long compute_t0(int d, int k, long horizon, double sigma0, double c1,
                double c2, double rho1, double kappa, double q, int d_mle);

// Confidence width alpha_t (or the (eps,delta) benchmark's modified width).
// The policy applies c_scale on top of this value.
double compute_confidence_width(long t, const PolicyConfig& cfg,
                                double lambda);

// Algorithm state for one run: explores for T0 rounds, then plays the
// perturbed-UCB assortment, refreshing the private MLE when the released
// Gram determinant has doubled since the last refresh (capped calls).
class DpmnlPolicy {
 public:
  // The ledger (optional) receives one charge per PrivateMLE call and one
  // charge for the whole PrivateCov tree, at construction.
  DpmnlPolicy(const PolicyConfig& cfg, const RngStream& stream,
              PrivacyLedger* ledger = nullptr);

  Assortment act(const RoundContext& ctx);
  void update(const RoundContext& ctx, const Assortment& s,
              const ChoiceOutcome& outcome);

  bool exploring() const { return rounds_seen_ < cfg_.explore_rounds; }
  long rounds_seen() const { return rounds_seen_; }
  int mle_calls() const { return mle_calls_; }
  const Vector& theta_hat() const { return theta_hat_; }
  double lambda() const { return lambda_; }
  const AggregationTree& tree() const { return tree_; }
  const PerturbationParams& mle_params() const { return mle_params_; }
  int mle_failures() const { return mle_failures_; }
  // Latest released Gram (null before the first release).
  const GramRelease* released() const {
    return released_ ? &*released_ : nullptr;
  }

  // Test hook: plant an estimate (e.g. the true parameter) and skip MLE
  // refreshes entirely.
  void freeze_theta(const Vector& theta);

 private:
  void refresh_mle(long t);
  double released_logdet(const Matrix& v) const;

  PolicyConfig cfg_;
  PerturbationParams mle_params_;
  double sigma_cov_ = 0.0;
  double lambda_ = 0.0;
  double per_call_rho_ = 0.0;        // zCDP ledger charge per MLE call
  EpsDeltaBudget per_call_eps_{};    // eps-delta ledger charge per MLE call
  AggregationTree tree_;
  InteractionLog log_;
  PrivacyLedger* ledger_ = nullptr;

  RngStream explore_stream_;
  RngStream mle_stream_;
  RngStream cov_stream_;

  Vector theta_hat_;
  bool theta_frozen_ = false;
  std::optional<GramRelease> released_;
  Eigen::LLT<Matrix> v_factor_;
  double logdet_ref_ = 0.0;
  long rounds_seen_ = 0;
  int mle_calls_ = 0;
  int mle_failures_ = 0;
};

}  // namespace dpmnl
