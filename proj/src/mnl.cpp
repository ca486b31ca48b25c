#include "dpmnl/mnl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpmnl {

namespace {

void check_assortment(const RoundContext& ctx, const Assortment& s) {
  if (s.item_indices.empty()) {
    throw std::invalid_argument("assortment is empty");
  }
  for (int idx : s.item_indices) {
    if (idx < 0 || idx >= ctx.num_items()) {
      throw std::out_of_range("assortment index " + std::to_string(idx) +
                              " outside catalog of size " +
                              std::to_string(ctx.num_items()));
    }
  }
}

}  // namespace

Vector choice_probabilities(const RoundContext& ctx, const Assortment& s,
                            const ModelParameter& theta) {
  check_assortment(ctx, s);
  const int k = s.size();
  Vector utilities(k);
  for (int j = 0; j < k; ++j) {
    const Vector& x = ctx.items[s.item_indices[j]];
    if (x.size() != theta.theta.size()) {
      throw std::invalid_argument("feature dimension " +
                                  std::to_string(x.size()) +
                                  " does not match parameter dimension " +
                                  std::to_string(theta.theta.size()));
    }
    utilities[j] = x.dot(theta.theta);
  }

  // Shift by max(0, max utility): the no-purchase option has utility 0.
  const double shift = std::max(0.0, utilities.maxCoeff());
  Vector probs(k + 1);
  probs[0] = std::exp(-shift);
  double denom = probs[0];
  for (int j = 0; j < k; ++j) {
    probs[j + 1] = std::exp(utilities[j] - shift);
    denom += probs[j + 1];
  }
  probs /= denom;
  return probs;
}

ChoiceOutcome sample_choice(const Vector& probs, RngStream& rng) {
  const double total = probs.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("choice probabilities sum to " +
                                std::to_string(total) + ", expected 1");
  }
  const double u = rng.uniform01();
  double cdf = 0.0;
  int slot = static_cast<int>(probs.size()) - 1;
  for (int j = 0; j < probs.size(); ++j) {
    cdf += probs[j];
    if (u < cdf) {
      slot = j;
      break;
    }
  }
  ChoiceOutcome outcome;
  outcome.slot = slot;
  outcome.one_hot = Vector::Zero(probs.size());
  outcome.one_hot[slot] = 1.0;
  return outcome;
}

double expected_revenue(const RoundContext& ctx, const Assortment& s,
                        const ModelParameter& theta) {
  check_assortment(ctx, s);
  const int k = s.size();
  Vector z(k);
  Vector r(k);
  for (int j = 0; j < k; ++j) {
    const Vector& x = ctx.items[s.item_indices[j]];
    if (x.size() != theta.theta.size()) {
      throw std::invalid_argument("feature/parameter dimension mismatch");
    }
    z[j] = x.dot(theta.theta);
    r[j] = ctx.revenues[s.item_indices[j]];
  }
  return optimistic_revenue(z, r);
}

double optimistic_revenue(const Vector& z, const Vector& r) {
  if (z.size() != r.size()) {
    throw std::invalid_argument("utility/revenue length mismatch");
  }
  if (z.size() == 0) return 0.0;
  const double shift = std::max(0.0, z.maxCoeff());
  double num = 0.0;
  double denom = std::exp(-shift);
  for (int j = 0; j < z.size(); ++j) {
    const double w = std::exp(z[j] - shift);
    num += r[j] * w;
    denom += w;
  }
  return num / denom;
}

namespace {

// Number of nonempty subsets of size <= k out of n, saturating at cap+1.
long count_subsets(int n, int k, long cap) {
  long total = 0;
  double binom = 1.0;
  for (int size = 1; size <= k; ++size) {
    binom = binom * (n - size + 1) / size;
    if (binom > static_cast<double>(cap) - total) return cap + 1;
    total += static_cast<long>(binom);
  }
  return total;
}

// DFS over index subsets in lexicographic order; strict improvement keeps
// the first (lex-smallest) maximizer.
void search_subsets(const Vector& z, const Vector& r, int max_size, int start,
                    std::vector<int>& current, Vector& zs, Vector& rs,
                    double& best_value, std::vector<int>& best_set) {
  const int n = static_cast<int>(z.size());
  for (int i = start; i < n; ++i) {
    current.push_back(i);
    const int k = static_cast<int>(current.size());
    zs[k - 1] = z[i];
    rs[k - 1] = r[i];
    const double value = optimistic_revenue(zs.head(k), rs.head(k));
    if (value > best_value) {
      best_value = value;
      best_set = current;
    }
    if (k < max_size) {
      search_subsets(z, r, max_size, i + 1, current, zs, rs, best_value,
                     best_set);
    }
    current.pop_back();
  }
}

bool uniform_positive_revenue(const Vector& r) {
  if (r.size() == 0) return false;
  const double first = r[0];
  if (first <= 0.0) return false;
  for (int i = 1; i < r.size(); ++i) {
    if (r[i] != first) return false;
  }
  return true;
}

Assortment top_k_assortment(const Vector& z, int k) {
  const int n = static_cast<int>(z.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return a < b;  // ties to the lowest index
  });
  Assortment s;
  s.item_indices.assign(order.begin(), order.begin() + k);
  std::sort(s.item_indices.begin(), s.item_indices.end());
  return s;
}

}  // namespace

Assortment best_assortment(const Vector& utilities, const Vector& revenues,
                           int max_size, AssortmentMode mode, long subset_cap) {
  const int n = static_cast<int>(utilities.size());
  if (utilities.size() != revenues.size()) {
    throw std::invalid_argument("utility/revenue length mismatch");
  }
  if (max_size < 1 || max_size > n) {
    throw std::invalid_argument("assortment size cap must be in [1, N]");
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(utilities[i])) {
      throw std::invalid_argument("non-finite utility at index " +
                                  std::to_string(i));
    }
  }

  const bool fast_ok = uniform_positive_revenue(revenues);
  if (mode == AssortmentMode::kTopK && !fast_ok) {
    throw std::invalid_argument(
        "top-K mode requires uniform positive revenues");
  }
  if (mode == AssortmentMode::kTopK ||
      (mode == AssortmentMode::kAuto && fast_ok)) {
    // With a common positive revenue the objective r*W/(1+W) is increasing
    // in W = sum of exp(z), so the K largest utilities are exactly optimal.
    return top_k_assortment(utilities, max_size);
  }

  if (count_subsets(n, max_size, subset_cap) > subset_cap) {
    throw std::runtime_error(
        "unsupported instance: " + std::to_string(n) + " choose <= " +
        std::to_string(max_size) +
        " exceeds the brute-force subset cap and the top-K fast path does "
        "not apply");
  }

  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<int> best_set;
  std::vector<int> current;
  Vector zs(max_size);
  Vector rs(max_size);
  search_subsets(utilities, revenues, max_size, 0, current, zs, rs, best_value,
                 best_set);
  Assortment s;
  s.item_indices = best_set;
  return s;
}

}  // namespace dpmnl
