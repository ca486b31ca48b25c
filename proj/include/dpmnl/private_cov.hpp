#pragma once

#include "dpmnl/mnl.hpp"
#include "dpmnl/rng.hpp"

namespace dpmnl {

enum class NoiseRegime {
  kZcdp,      // symmetric noise: upper triangle i.i.d., mirrored
  kEpsDelta,  // full i.i.d. draw, then N = (N' + N'^T)/sqrt(2)
  kOff,       // exact p-sums, no noise
};

// Frobenius sensitivity of one round's Gram contribution: sqrt(2K).
double sensitivity_bound(int k);

// m = 1 + floor(log2 T): number of binary-counter levels.
int tree_depth(long horizon);

// Per-node noise std dev. zCDP: sigma^2 = K*m/rho2.
double cov_noise_sigma_zcdp(int k, long horizon, double rho2);

// (eps,delta): sigma^2 = 32*m*K*ln(4/delta2)^2 / eps2^2.
double cov_noise_sigma_epsdelta(int k, long horizon, double eps2,
                                double delta2);

// Positive-definiteness shift: lambda = sigma*sqrt(m)*(2*sqrt(d)
//   + 2*d^{1/6}*ln(d)^{1/3}
//   + 6*(1+(ln d/d)^{1/3})*sqrt(ln d)/sqrt(ln(1+(ln d/d)^{1/3}))
//   + 2*sqrt(4*ln T)).
// Undefined at d = 1 (the ln d terms degenerate); throws there.
double compute_lambda(double sigma_cov, int d, long horizon);

// Release of the noisy prefix Gram sum, shifted to positive definiteness.
struct GramRelease {
  Matrix v_raw;               // sum of live noisy p-sums
  double lambda_shift = 0.0;  // lambda
  Matrix v;                   // v_raw + 2*lambda*I (+ emergency re-shift)
  double extra_shift = 0.0;   // nonzero only when the Cholesky check failed
};

// Binary-counter state holding exact and noisy p-sums of per-round Gram
// matrices. Each level's noise is drawn once when the p-sum is formed and
// frozen until the level is cleared.
class AggregationTree {
 public:
  AggregationTree(int d, long horizon, double sigma_cov, NoiseRegime regime);

  // Folds one round's Gram matrix into the counter and draws the new
  // level's noise. Throws once the horizon is exhausted.
  void update(const Matrix& round_gram, RngStream& rng);

  // V_raw = sum of noisy p-sums over the set bits of t; V = V_raw +
  // 2*lambda*I. If V fails a Cholesky check it is re-shifted by
  // (|lambda_min| + 1e-6)*I and the warning counter increments.
  GramRelease release(double lambda);

  long t() const { return t_; }
  long horizon() const { return horizon_; }
  int depth() const { return depth_; }
  double sigma() const { return sigma_; }
  int pd_failures() const { return pd_failures_; }

  // Exact prefix sum of everything folded in so far (test oracle support).
  const Matrix& exact_prefix_sum() const { return exact_sum_; }

 private:
  Matrix draw_noise(RngStream& rng) const;

  int d_;
  long horizon_;
  int depth_;
  double sigma_;
  NoiseRegime regime_;
  long t_ = 0;
  std::vector<Matrix> p_sums_;
  std::vector<Matrix> noisy_p_sums_;
  Matrix exact_sum_;
  int pd_failures_ = 0;
};

}  // namespace dpmnl
