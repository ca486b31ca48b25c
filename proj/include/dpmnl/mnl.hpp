#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dpmnl/rng.hpp"

namespace dpmnl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One user arrival: N item feature vectors plus their public revenues.
struct RoundContext {
  std::vector<Vector> items;  // N vectors, shared dimension d
  Vector revenues;            // length N, each |r| <= 1
  long round_index = 0;

  int num_items() const { return static_cast<int>(items.size()); }
  int dim() const { return items.empty() ? 0 : static_cast<int>(items[0].size()); }
};

// Utility parameter; the environment's true parameter is norm-constrained in
// assumption-faithful mode, estimates are not.
struct ModelParameter {
  Vector theta;
};

// Ordered set of distinct item indices, 1 <= size <= K.
struct Assortment {
  std::vector<int> item_indices;  // strictly increasing

  int size() const { return static_cast<int>(item_indices.size()); }
};

// Index 0 is the no-purchase option; slots 1..|S| follow assortment order.
struct ChoiceOutcome {
  int slot = 0;    // 0 = no purchase, k >= 1 = k-th offered item
  Vector one_hot;  // length |S|+1, exactly one entry equal to 1
};

// p(i|S) = exp(x_i.theta) / (1 + sum_j exp(x_j.theta)), entry 0 = no purchase.
// Exponentials are shifted by max(0, max utility) so |utility| > 700 is safe.
Vector choice_probabilities(const RoundContext& ctx, const Assortment& s,
                            const ModelParameter& theta);

// One multinomial draw over probs (entry 0 = no purchase). probs must sum to
// 1 within 1e-12.
ChoiceOutcome sample_choice(const Vector& probs, RngStream& rng);

// sum_i r_i p(i|S,theta); equals optimistic_revenue at z_i = x_i.theta by
// construction (single code path).
double expected_revenue(const RoundContext& ctx, const Assortment& s,
                        const ModelParameter& theta);

// sum_i r_i exp(z_i) / (1 + sum_j exp(z_j)), overflow-safe.
double optimistic_revenue(const Vector& z, const Vector& r);

enum class AssortmentMode {
  kAuto,        // top-K when revenues are uniform positive, else brute force
  kTopK,        // requires uniform positive revenues
  kBruteForce,  // exact search over all subsets of size 1..K
};

inline constexpr long kDefaultSubsetCap = 200000;

// Argmax of the optimistic revenue over assortments of size <= max_size.
// Ties break toward the lexicographically smallest index set. Brute force
// refuses instances with more than subset_cap candidate subsets.
Assortment best_assortment(const Vector& utilities, const Vector& revenues,
                           int max_size,
                           AssortmentMode mode = AssortmentMode::kAuto,
                           long subset_cap = kDefaultSubsetCap);

}  // namespace dpmnl
