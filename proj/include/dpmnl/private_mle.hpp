#pragma once

#include <optional>
#include <vector>

#include "dpmnl/mnl.hpp"
#include "dpmnl/rng.hpp"

namespace dpmnl {

// Objective-perturbation parameters. For the MNL loss the per-record
// gradient norm is bounded by L = 2 and the Hessian spectrum by eta = 4;
// the per-record Hessian rank is at most R = min(d, K-1).
struct PerturbationParams {
  double ridge = 0.0;      // Delta, weight of (Delta/2)*||theta||^2
  double sigma = 0.0;      // std dev of the linear noise term b
  double q = 0.5;          // budget split inside the mechanism
  int hessian_rank = 0;    // R

  static constexpr double kGradBound = 2.0;        // L
  static constexpr double kHessianEigBound = 4.0;  // eta
};

// Ridge weight and noise scale for one rho-zCDP call:
//   ridge = eta / (exp((1-q)*rho/R) - 1)
//   sigma = L * (sqrt(d + 2*q*rho) + sqrt(d)) / (q*rho)
// rho is the per-call budget (rho1 / D_MLE inside the policy).
PerturbationParams calibrate_zcdp(double rho_per_call, int d, int k, double q);

// Ridge weight and noise scale for one (eps, delta)-DP call:
//   ridge = (1-q)*R*eta / eps
//   sigma = L * (sqrt(A) + sqrt(A + 2*q*eps)) / (q*eps),
//   A = d + 2*sqrt(d*ln(2/delta)) + 2*ln(2/delta)
PerturbationParams calibrate_epsdelta(double eps_per_call,
                                      double delta_per_call, int d, int k,
                                      double q);

// One logged interaction: the offered feature vectors in assortment order
// and the chosen slot (0 = no purchase, k >= 1 = k-th offered item).
struct MnlRecord {
  std::vector<Vector> offered;
  int chosen_slot = 0;
};

struct InteractionLog {
  std::vector<MnlRecord> records;

  void add(const RoundContext& ctx, const Assortment& s,
           const ChoiceOutcome& outcome);
  bool empty() const { return records.empty(); }
  long size() const { return static_cast<long>(records.size()); }
};

struct NllEval {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

// Negative log-likelihood of the MNL model over the log, with gradient and
// (optionally) Hessian. The Hessian is symmetric PSD.
NllEval nll_eval(const InteractionLog& log, const Vector& theta,
                 bool want_hessian = true);

struct MleResult {
  Vector theta_hat;
  double grad_residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  // The realized noise draw; consumed by white-box tests only and never
  // serialized anywhere.
  Vector noise;
};

inline constexpr double kMleGradTolerance = 1e-8;
inline constexpr int kMleMaxIterations = 200;

// Minimizes sum_n l(theta; z_n) + (ridge/2)*||theta||^2 + b.theta with b
// drawn fresh from N(0, sigma^2 I). Damped Newton with backtracking line
// search; falls back to a gradient step if the Hessian factorization fails.
// On non-convergence the result carries the best iterate with
// converged = false; no exception is thrown.
MleResult solve_perturbed_mle(const InteractionLog& log,
                              const PerturbationParams& params, RngStream& rng,
                              const Vector* warm_start = nullptr);

// Deterministic core with an explicit noise vector (test hook; also the
// noise-off path with b = 0).
MleResult solve_perturbed_mle_with_noise(const InteractionLog& log,
                                         double ridge, const Vector& b,
                                         const Vector* warm_start = nullptr);

}  // namespace dpmnl
