#include "dpmnl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpmnl {

namespace {

constexpr double kNoiseOffRidge = 1e-6;

// The three-term bracket shared by the zCDP confidence width and C_{rho1,T}:
//   sqrt((d/2)ln(1+t/d) + ln t)
//   + 4/(exp((1-q)rho1/(R*D)) - 1)
//   + (4*D*sqrt(d)*(sqrt(d+2q*rho1/D)+sqrt(d))/(q*rho1)) * sqrt(ln T / K)
double zcdp_width_bracket(long t, int d, int k, long horizon, double rho1,
                          double q, int d_mle, bool noise_off) {
  const double td = static_cast<double>(t);
  const double dd = static_cast<double>(d);
  double bracket =
      std::sqrt(0.5 * dd * std::log1p(td / dd) + std::log(td));
  if (!noise_off) {
    const int r = std::min(d, k - 1);
    bracket += 4.0 / std::expm1((1.0 - q) * rho1 / (r * d_mle));
    bracket += 4.0 * d_mle * std::sqrt(dd) *
               (std::sqrt(dd + 2.0 * q * rho1 / d_mle) + std::sqrt(dd)) /
               (q * rho1) *
               std::sqrt(std::log(static_cast<double>(horizon)) / k);
  }
  return bracket;
}

}  // namespace

int PolicyConfig::hessian_rank() const { return std::min(dim, assortment_size - 1); }

void PolicyConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("policy config: T must be >= 2");
  if (explore_rounds < 1 || explore_rounds >= horizon) {
    throw std::invalid_argument("policy config: need 1 <= T0 < T");
  }
  if (num_items < 1) throw std::invalid_argument("policy config: N < 1");
  if (assortment_size < 2 || assortment_size > num_items) {
    throw std::invalid_argument("policy config: need 2 <= K <= N");
  }
  if (dim < 1) throw std::invalid_argument("policy config: d < 1");
  if (mle_call_cap < 1) throw std::invalid_argument("policy config: D_MLE < 1");
  if (kappa <= 0.0) throw std::invalid_argument("policy config: kappa <= 0");
  if (q <= 0.0 || q >= 1.0) {
    throw std::invalid_argument("policy config: q outside (0,1)");
  }
  if (c_scale < 0.0) throw std::invalid_argument("policy config: c_scale < 0");
  if (oracle_theta && !noise_off) {
    throw std::invalid_argument("policy config: oracle_theta needs noise_off");
  }
  if (oracle_theta && oracle_theta->size() != dim) {
    throw std::invalid_argument("policy config: oracle_theta length != d");
  }
  if (!noise_off) {
    if (regime == PrivacyRegime::kZcdp) {
      if (rho1 <= 0.0 || rho2 <= 0.0) {
        throw std::invalid_argument("policy config: rho1, rho2 must be > 0");
      }
    } else {
      if (eps1 <= 0.0 || eps2 <= 0.0 || delta1 <= 0.0 || delta1 >= 1.0 ||
          delta2 <= 0.0 || delta2 >= 1.0) {
        throw std::invalid_argument("policy config: bad (eps, delta) budgets");
      }
    }
    if (dim < 2 && !lambda_override) {
      throw std::invalid_argument(
          "policy config: d = 1 needs lambda_override (the Lemma bound is "
          "undefined there)");
    }
  }
}

long compute_t0(int d, int k, long horizon, double sigma0, double c1,
                double c2, double rho1, double kappa, double q, int d_mle) {
  if (sigma0 <= 0.0) throw std::invalid_argument("compute_t0: sigma0 <= 0");
  if (kappa <= 0.0) throw std::invalid_argument("compute_t0: kappa <= 0");
  if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("compute_t0: bad q");
  if (d < 1 || k < 2 || horizon < 2 || d_mle < 1) {
    throw std::invalid_argument("compute_t0: bad dimensions");
  }
  const bool no_privacy = !(rho1 > 0.0) || std::isinf(rho1);
  const double bracket = zcdp_width_bracket(horizon, d, k, horizon, rho1, q,
                                            d_mle, no_privacy);
  const double c_rho = bracket * bracket / (kappa * kappa);
  const double lead = (c1 * std::sqrt(static_cast<double>(d)) +
                       c2 * std::sqrt(2.0 * std::log(static_cast<double>(
                                                horizon)))) /
                      sigma0;
  return static_cast<long>(
      std::ceil(lead * lead / k + 2.0 * c_rho / (k * sigma0)));
}

double compute_confidence_width(long t, const PolicyConfig& cfg,
                                double lambda) {
  if (t < 1) throw std::invalid_argument("confidence width: t < 1");
  if (cfg.noise_off || cfg.regime == PrivacyRegime::kZcdp) {
    const double bracket =
        zcdp_width_bracket(t, cfg.dim, cfg.assortment_size, cfg.horizon,
                           cfg.rho1, cfg.q, cfg.mle_call_cap, cfg.noise_off);
    return bracket / cfg.kappa + std::sqrt(3.0 * lambda);
  }

  // (eps, delta) benchmark width.
  const double dd = static_cast<double>(cfg.dim);
  const double td = static_cast<double>(t);
  const EpsDeltaBudget per_call =
      per_call_mle_budget_epsdelta(cfg.eps1, cfg.delta1, cfg.mle_call_cap);
  const PerturbationParams mle = calibrate_epsdelta(
      per_call.epsilon, per_call.delta, cfg.dim, cfg.assortment_size, cfg.q);
  const double rk = cfg.hessian_rank();
  const double sqrt_k = std::sqrt(static_cast<double>(cfg.assortment_size));
  return std::sqrt(0.5 * dd * std::log1p((td + 1.0) / dd) + std::log(td + 1.0)) +
         4.0 * rk / (per_call.epsilon * sqrt_k) +
         std::sqrt(4.0 * dd * std::log(static_cast<double>(cfg.horizon)) *
                   mle.sigma * mle.sigma) /
             sqrt_k +
         std::sqrt(3.0 * lambda);
}

DpmnlPolicy::DpmnlPolicy(const PolicyConfig& cfg, const RngStream& stream,
                         PrivacyLedger* ledger)
    : cfg_(cfg),
      tree_(cfg.dim, cfg.horizon, 0.0, NoiseRegime::kOff),
      ledger_(ledger),
      explore_stream_(stream.derive("explore")),
      mle_stream_(stream.derive("mle-noise")),
      cov_stream_(stream.derive("cov-noise")) {
  cfg_.validate();

  NoiseRegime tree_regime = NoiseRegime::kOff;
  if (cfg_.noise_off) {
    mle_params_ = PerturbationParams{};
    mle_params_.ridge = kNoiseOffRidge;
    mle_params_.sigma = 0.0;
    mle_params_.q = cfg_.q;
    mle_params_.hessian_rank = cfg_.hessian_rank();
    sigma_cov_ = 0.0;
    lambda_ = cfg_.lambda_override.value_or(0.0);
    if (ledger_) ledger_->charge("private_cov_tree", "noise-off", 0.0);
  } else if (cfg_.regime == PrivacyRegime::kZcdp) {
    per_call_rho_ = cfg_.rho1 / cfg_.mle_call_cap;
    mle_params_ = calibrate_zcdp(per_call_rho_, cfg_.dim, cfg_.assortment_size,
                                 cfg_.q);
    sigma_cov_ =
        cov_noise_sigma_zcdp(cfg_.assortment_size, cfg_.horizon, cfg_.rho2);
    lambda_ = cfg_.lambda_override.value_or(
        compute_lambda(sigma_cov_, cfg_.dim, cfg_.horizon));
    tree_regime = NoiseRegime::kZcdp;
    if (ledger_) {
      ledger_->charge("private_cov_tree", "gaussian-tree-zcdp", cfg_.rho2);
    }
  } else {
    per_call_eps_ =
        per_call_mle_budget_epsdelta(cfg_.eps1, cfg_.delta1, cfg_.mle_call_cap);
    mle_params_ =
        calibrate_epsdelta(per_call_eps_.epsilon, per_call_eps_.delta,
                           cfg_.dim, cfg_.assortment_size, cfg_.q);
    sigma_cov_ = cov_noise_sigma_epsdelta(cfg_.assortment_size, cfg_.horizon,
                                          cfg_.eps2, cfg_.delta2);
    lambda_ = cfg_.lambda_override.value_or(
        compute_lambda(sigma_cov_, cfg_.dim, cfg_.horizon));
    tree_regime = NoiseRegime::kEpsDelta;
    if (ledger_) {
      ledger_->charge("private_cov_tree", "gaussian-tree-epsdelta", cfg_.eps2,
                      cfg_.delta2);
    }
  }

  tree_ = AggregationTree(cfg_.dim, cfg_.horizon, sigma_cov_, tree_regime);
  theta_hat_ = Vector::Zero(cfg_.dim);
  if (cfg_.oracle_theta) freeze_theta(*cfg_.oracle_theta);
}

void DpmnlPolicy::freeze_theta(const Vector& theta) {
  theta_hat_ = theta;
  theta_frozen_ = true;
}

Assortment DpmnlPolicy::act(const RoundContext& ctx) {
  // Replay rounds may expose a different catalog size than the synthetic N;
  // anything >= K works.
  const int n = ctx.num_items();
  if (n < cfg_.assortment_size || ctx.dim() != cfg_.dim) {
    throw std::invalid_argument("act: context shape mismatch");
  }
  const long t = rounds_seen_ + 1;

  if (cfg_.oracle_theta) {
    Vector z(n);
    for (int i = 0; i < n; ++i) z[i] = ctx.items[i].dot(theta_hat_);
    return best_assortment(z, ctx.revenues, cfg_.assortment_size,
                           AssortmentMode::kAuto, cfg_.subset_cap);
  }

  if (t <= cfg_.explore_rounds) {
    // Uniform random size-K subset (partial Fisher-Yates).
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int j = 0; j < cfg_.assortment_size; ++j) {
      const int swap_at =
          j + static_cast<int>(explore_stream_.uniform_below(idx.size() - j));
      std::swap(idx[j], idx[swap_at]);
    }
    Assortment s;
    s.item_indices.assign(idx.begin(), idx.begin() + cfg_.assortment_size);
    std::sort(s.item_indices.begin(), s.item_indices.end());
    return s;
  }

  if (!released_) {
    throw std::logic_error("act: exploitation phase before first release");
  }
  const double width =
      cfg_.c_scale * compute_confidence_width(t, cfg_, lambda_);
  Vector z(n);
  for (int i = 0; i < n; ++i) {
    const Vector& x = ctx.items[i];
    double bonus = 0.0;
    if (width != 0.0) {
      // ||x||_{V^-1} via the cached Cholesky factor: ||L^-1 x||_2.
      bonus = v_factor_.matrixL().solve(x).norm();
    }
    z[i] = x.dot(theta_hat_) + width * bonus;
  }
  return best_assortment(z, ctx.revenues, cfg_.assortment_size,
                         AssortmentMode::kAuto, cfg_.subset_cap);
}

void DpmnlPolicy::update(const RoundContext& ctx, const Assortment& s,
                         const ChoiceOutcome& outcome) {
  ++rounds_seen_;
  const long t = rounds_seen_;
  log_.add(ctx, s, outcome);

  Matrix gram = Matrix::Zero(cfg_.dim, cfg_.dim);
  for (int idx : s.item_indices) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(ctx.items[idx], 1.0);
  }
  gram.triangularView<Eigen::StrictlyUpper>() =
      gram.transpose().triangularView<Eigen::StrictlyUpper>();
  tree_.update(gram, cov_stream_);

  if (t < cfg_.explore_rounds) return;

  if (t == cfg_.explore_rounds) {
    // End of pure exploration: first MLE and first release.
    if (!theta_frozen_) refresh_mle(t);
    released_ = tree_.release(lambda_);
    v_factor_.compute(released_->v);
    logdet_ref_ = released_logdet(released_->v);
    return;
  }

  GramRelease rel = tree_.release(lambda_);
  Eigen::LLT<Matrix> factor(rel.v);
  double logdet = 0.0;
  for (int i = 0; i < cfg_.dim; ++i) {
    logdet += 2.0 * std::log(factor.matrixL()(i, i));
  }
  if (logdet > std::log(2.0) + logdet_ref_ && mle_calls_ < cfg_.mle_call_cap &&
      !theta_frozen_) {
    refresh_mle(t);
    logdet_ref_ = logdet;
  }
  released_ = std::move(rel);
  v_factor_ = std::move(factor);
}

double DpmnlPolicy::released_logdet(const Matrix& v) const {
  Eigen::LLT<Matrix> llt(v);
  double logdet = 0.0;
  for (int i = 0; i < cfg_.dim; ++i) {
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return logdet;
}

void DpmnlPolicy::refresh_mle(long t) {
  MleResult result =
      solve_perturbed_mle(log_, mle_params_, mle_stream_, &theta_hat_);
  ++mle_calls_;
  if (ledger_) {
    if (cfg_.noise_off) {
      ledger_->charge("private_mle_call_t" + std::to_string(t), "noise-off",
                      0.0);
    } else if (cfg_.regime == PrivacyRegime::kZcdp) {
      ledger_->charge("private_mle_call_t" + std::to_string(t),
                      "objective-perturbation-zcdp", per_call_rho_);
    } else {
      ledger_->charge("private_mle_call_t" + std::to_string(t),
                      "objective-perturbation-epsdelta", per_call_eps_.epsilon,
                      per_call_eps_.delta);
    }
  }
  if (result.converged) {
    theta_hat_ = result.theta_hat;
  } else {
    // Budget is spent either way; keep the previous estimate and record it.
    ++mle_failures_;
    if (ledger_) {
      ledger_->charge("private_mle_nonconvergence_t" + std::to_string(t),
                      "warning", 0.0);
    }
  }
}

}  // namespace dpmnl
