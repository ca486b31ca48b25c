#include "dpmnl/private_cov.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpmnl {

double sensitivity_bound(int k) {
  if (k < 1) throw std::invalid_argument("sensitivity_bound: K < 1");
  return std::sqrt(2.0 * k);
}

int tree_depth(long horizon) {
  if (horizon < 1) throw std::invalid_argument("tree_depth: T < 1");
  int m = 1;
  while ((1L << m) <= horizon) ++m;  // m = 1 + floor(log2 T)
  return m;
}

double cov_noise_sigma_zcdp(int k, long horizon, double rho2) {
  if (rho2 <= 0.0) throw std::invalid_argument("cov noise: rho2 <= 0");
  const int m = tree_depth(horizon);
  return std::sqrt(static_cast<double>(k) * m / rho2);
}

double cov_noise_sigma_epsdelta(int k, long horizon, double eps2,
                                double delta2) {
  if (eps2 <= 0.0 || delta2 <= 0.0 || delta2 >= 1.0) {
    throw std::invalid_argument("cov noise: bad (eps2, delta2)");
  }
  const int m = tree_depth(horizon);
  const double log_term = std::log(4.0 / delta2);
  return std::sqrt(32.0 * m * k * log_term * log_term / (eps2 * eps2));
}

double compute_lambda(double sigma_cov, int d, long horizon) {
  if (d < 2) {
    throw std::invalid_argument(
        "compute_lambda: unsupported dimension d < 2 (the bound's ln d "
        "terms degenerate); supply lambda directly");
  }
  if (horizon < 1) throw std::invalid_argument("compute_lambda: T < 1");
  if (sigma_cov < 0.0) throw std::invalid_argument("compute_lambda: sigma < 0");
  const double m = tree_depth(horizon);
  const double ld = std::log(static_cast<double>(d));
  const double ratio = std::cbrt(ld / d);
  const double bracket =
      2.0 * std::sqrt(static_cast<double>(d)) +
      2.0 * std::pow(static_cast<double>(d), 1.0 / 6.0) * std::cbrt(ld) +
      6.0 * (1.0 + ratio) * std::sqrt(ld) / std::sqrt(std::log1p(ratio)) +
      2.0 * std::sqrt(4.0 * std::log(static_cast<double>(horizon)));
  return sigma_cov * std::sqrt(m) * bracket;
}

AggregationTree::AggregationTree(int d, long horizon, double sigma_cov,
                                 NoiseRegime regime)
    : d_(d),
      horizon_(horizon),
      depth_(tree_depth(horizon)),
      sigma_(sigma_cov),
      regime_(regime) {
  if (d < 1) throw std::invalid_argument("AggregationTree: d < 1");
  if (sigma_cov < 0.0) throw std::invalid_argument("AggregationTree: sigma < 0");
  p_sums_.assign(depth_, Matrix::Zero(d, d));
  noisy_p_sums_.assign(depth_, Matrix::Zero(d, d));
  exact_sum_ = Matrix::Zero(d, d);
}

Matrix AggregationTree::draw_noise(RngStream& rng) const {
  Matrix n = Matrix::Zero(d_, d_);
  if (sigma_ == 0.0 || regime_ == NoiseRegime::kOff) return n;
  if (regime_ == NoiseRegime::kZcdp) {
    for (int i = 0; i < d_; ++i) {
      for (int j = i; j < d_; ++j) {
        n(i, j) = rng.normal(sigma_);
        n(j, i) = n(i, j);
      }
    }
  } else {
    for (int i = 0; i < d_; ++i) {
      for (int j = 0; j < d_; ++j) n(i, j) = rng.normal(sigma_);
    }
    n = ((n + n.transpose()) / std::sqrt(2.0)).eval();
  }
  return n;
}

void AggregationTree::update(const Matrix& round_gram, RngStream& rng) {
  if (t_ >= horizon_) {
    throw std::runtime_error("AggregationTree: horizon exhausted at t = " +
                             std::to_string(t_));
  }
  if (round_gram.rows() != d_ || round_gram.cols() != d_) {
    throw std::invalid_argument("AggregationTree: gram dimension mismatch");
  }
  ++t_;
  exact_sum_ += round_gram;

  int level = 0;
  while (((t_ >> level) & 1L) == 0) ++level;  // least set bit of t

  // Fold from the highest lower level (earliest rounds) down, then add the
  // new gram: with zero noise the p-sums reproduce a plain left-to-right
  // prefix sum bit for bit.
  Matrix folded = Matrix::Zero(d_, d_);
  for (int l = level - 1; l >= 0; --l) {
    folded += p_sums_[l];
    p_sums_[l].setZero();
    noisy_p_sums_[l].setZero();
  }
  folded += round_gram;
  p_sums_[level] = folded;
  if (sigma_ == 0.0 || regime_ == NoiseRegime::kOff) {
    noisy_p_sums_[level] = folded;
  } else {
    noisy_p_sums_[level] = folded + draw_noise(rng);
  }
}

GramRelease AggregationTree::release(double lambda) {
  if (t_ < 1) throw std::runtime_error("AggregationTree: nothing to release");
  GramRelease rel;
  rel.v_raw = Matrix::Zero(d_, d_);
  // High bits cover early rounds; summing downward keeps the noiseless
  // release equal to the sequential prefix sum.
  for (int l = depth_ - 1; l >= 0; --l) {
    if ((t_ >> l) & 1L) rel.v_raw += noisy_p_sums_[l];
  }
  rel.lambda_shift = lambda;
  rel.v = rel.v_raw + 2.0 * lambda * Matrix::Identity(d_, d_);

  Eigen::LLT<Matrix> llt(rel.v);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(rel.v);
    const double min_eig = eig.eigenvalues().minCoeff();
    rel.extra_shift = std::abs(min_eig) + 1e-6;
    rel.v.diagonal().array() += rel.extra_shift;
    ++pd_failures_;
  }
  return rel;
}

}  // namespace dpmnl
