#include "dpmnl/private_mle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpmnl {

PerturbationParams calibrate_zcdp(double rho_per_call, int d, int k,
                                  double q) {
  if (rho_per_call <= 0.0) {
    throw std::invalid_argument("calibrate_zcdp: rho <= 0");
  }
  if (q <= 0.0 || q >= 1.0) {
    throw std::invalid_argument("calibrate_zcdp: q outside (0,1)");
  }
  if (d < 1 || k < 2) {
    throw std::invalid_argument("calibrate_zcdp: need d >= 1 and K >= 2");
  }
  PerturbationParams p;
  p.q = q;
  p.hessian_rank = std::min(d, k - 1);
  p.ridge = PerturbationParams::kHessianEigBound /
            std::expm1((1.0 - q) * rho_per_call / p.hessian_rank);
  p.sigma = PerturbationParams::kGradBound *
            (std::sqrt(d + 2.0 * q * rho_per_call) + std::sqrt(double(d))) /
            (q * rho_per_call);
  return p;
}

PerturbationParams calibrate_epsdelta(double eps_per_call,
                                      double delta_per_call, int d, int k,
                                      double q) {
  if (eps_per_call <= 0.0 || delta_per_call <= 0.0 || delta_per_call >= 1.0) {
    throw std::invalid_argument("calibrate_epsdelta: bad budget");
  }
  if (q <= 0.0 || q >= 1.0) {
    throw std::invalid_argument("calibrate_epsdelta: q outside (0,1)");
  }
  if (d < 1 || k < 2) {
    throw std::invalid_argument("calibrate_epsdelta: need d >= 1 and K >= 2");
  }
  PerturbationParams p;
  p.q = q;
  p.hessian_rank = std::min(d, k - 1);
  p.ridge = (1.0 - q) * p.hessian_rank *
            PerturbationParams::kHessianEigBound / eps_per_call;
  const double log_term = std::log(2.0 / delta_per_call);
  const double a = d + 2.0 * std::sqrt(d * log_term) + 2.0 * log_term;
  p.sigma = PerturbationParams::kGradBound *
            (std::sqrt(a) + std::sqrt(a + 2.0 * q * eps_per_call)) /
            (q * eps_per_call);
  return p;
}

void InteractionLog::add(const RoundContext& ctx, const Assortment& s,
                         const ChoiceOutcome& outcome) {
  if (outcome.slot < 0 || outcome.slot > s.size()) {
    throw std::invalid_argument("outcome slot inconsistent with assortment");
  }
  MnlRecord rec;
  rec.offered.reserve(s.item_indices.size());
  for (int idx : s.item_indices) rec.offered.push_back(ctx.items[idx]);
  rec.chosen_slot = outcome.slot;
  records.push_back(std::move(rec));
}

NllEval nll_eval(const InteractionLog& log, const Vector& theta,
                 bool want_hessian) {
  if (log.empty()) {
    throw std::invalid_argument("nll_eval: empty interaction log");
  }
  const int d = static_cast<int>(theta.size());
  NllEval out;
  out.gradient = Vector::Zero(d);
  if (want_hessian) out.hessian = Matrix::Zero(d, d);

  Vector weights;
  Vector mean_x(d);
  for (const MnlRecord& rec : log.records) {
    const int k = static_cast<int>(rec.offered.size());
    weights.resize(k);
    double max_u = 0.0;  // the no-purchase option has utility 0
    for (int j = 0; j < k; ++j) {
      if (rec.offered[j].size() != d) {
        throw std::invalid_argument("nll_eval: record dimension mismatch");
      }
      weights[j] = rec.offered[j].dot(theta);
      max_u = std::max(max_u, weights[j]);
    }
    double denom = std::exp(-max_u);
    for (int j = 0; j < k; ++j) {
      weights[j] = std::exp(weights[j] - max_u);
      denom += weights[j];
    }
    // log(1 + sum exp(u)) = max_u + log(exp(-max_u) + sum exp(u - max_u))
    out.value += max_u + std::log(denom);
    if (rec.chosen_slot > 0) {
      out.value -= rec.offered[rec.chosen_slot - 1].dot(theta);
      out.gradient -= rec.offered[rec.chosen_slot - 1];
    }

    weights /= denom;  // p(j | S, theta)
    mean_x.setZero();
    for (int j = 0; j < k; ++j) mean_x += weights[j] * rec.offered[j];
    out.gradient += mean_x;

    if (want_hessian) {
      for (int j = 0; j < k; ++j) {
        out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(rec.offered[j],
                                                               weights[j]);
      }
      out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(mean_x, -1.0);
    }
  }
  if (want_hessian) {
    out.hessian.triangularView<Eigen::StrictlyUpper>() =
        out.hessian.transpose().triangularView<Eigen::StrictlyUpper>();
  }
  return out;
}

namespace {

struct Objective {
  const InteractionLog* log;
  double ridge;
  const Vector* b;

  double value(const Vector& theta) const {
    double v = 0.5 * ridge * theta.squaredNorm() + b->dot(theta);
    if (!log->empty()) v += nll_eval(*log, theta, false).value;
    return v;
  }

  // Returns value; fills gradient and Hessian of the full objective.
  double eval(const Vector& theta, Vector& grad, Matrix& hess) const {
    const int d = static_cast<int>(theta.size());
    double v;
    if (log->empty()) {
      v = 0.0;
      grad.setZero(d);
      hess.setZero(d, d);
    } else {
      NllEval e = nll_eval(*log, theta, true);
      v = e.value;
      grad = e.gradient;
      hess = e.hessian;
    }
    v += 0.5 * ridge * theta.squaredNorm() + b->dot(theta);
    grad += ridge * theta + *b;
    hess.diagonal().array() += ridge;
    return v;
  }
};

}  // namespace

MleResult solve_perturbed_mle_with_noise(const InteractionLog& log,
                                         double ridge, const Vector& b,
                                         const Vector* warm_start) {
  if (ridge <= 0.0) {
    throw std::invalid_argument(
        "solve_perturbed_mle: ridge must be positive for a unique minimizer");
  }
  const int d = static_cast<int>(b.size());
  Objective obj{&log, ridge, &b};

  Vector theta = warm_start ? *warm_start : Vector::Zero(d);
  Vector grad(d);
  Matrix hess(d, d);
  double value = obj.eval(theta, grad, hess);

  MleResult result;
  result.noise = b;
  int iter = 0;
  for (; iter < kMleMaxIterations; ++iter) {
    const double grad_norm = grad.norm();
    if (grad_norm <= kMleGradTolerance) {
      result.converged = true;
      break;
    }

    Vector step;
    Eigen::LLT<Matrix> llt(hess);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(-grad);
    } else {
      const double curvature_cap =
          ridge + PerturbationParams::kHessianEigBound *
                      std::max<long>(1, log.size());
      step = -grad / curvature_cap;
    }

    // Backtracking line search (Armijo).
    const double slope = grad.dot(step);
    double t = 1.0;
    Vector candidate;
    double candidate_value = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      candidate = theta + t * step;
      candidate_value = obj.value(candidate);
      if (candidate_value <= value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // step direction numerically exhausted

    theta = candidate;
    value = obj.eval(theta, grad, hess);
  }

  result.theta_hat = theta;
  result.grad_residual_norm = grad.norm();
  result.iterations = iter;
  if (result.grad_residual_norm <= kMleGradTolerance) result.converged = true;
  return result;
}

MleResult solve_perturbed_mle(const InteractionLog& log,
                              const PerturbationParams& params, RngStream& rng,
                              const Vector* warm_start) {
  int d = 0;
  if (warm_start) {
    d = static_cast<int>(warm_start->size());
  } else if (!log.empty()) {
    d = static_cast<int>(log.records.front().offered.front().size());
  } else {
    throw std::invalid_argument(
        "solve_perturbed_mle: dimension unknown (empty log, no warm start)");
  }
  Vector b(d);
  if (params.sigma > 0.0) {
    for (int i = 0; i < d; ++i) b[i] = rng.normal(params.sigma);
  } else {
    b.setZero();
  }
  return solve_perturbed_mle_with_noise(log, params.ridge, b, warm_start);
}

}  // namespace dpmnl
