#include <doctest.h>

#include <cmath>
#include <set>

#include "dpmnl/mnl.hpp"
#include "dpmnl/rng.hpp"

using namespace dpmnl;

namespace {

RoundContext make_ctx(const std::vector<Vector>& items,
                      const Vector& revenues) {
  RoundContext ctx;
  ctx.items = items;
  ctx.revenues = revenues;
  return ctx;
}

Assortment all_items(int n) {
  Assortment s;
  for (int i = 0; i < n; ++i) s.item_indices.push_back(i);
  return s;
}

// Exhaustive reference search, independent of best_assortment's internals.
Assortment exhaustive_argmax(const Vector& z, const Vector& r, int max_size) {
  const int n = static_cast<int>(z.size());
  Assortment best;
  double best_value = -1e300;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    if (static_cast<int>(idx.size()) > max_size) continue;
    Vector zs(idx.size()), rs(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
      zs[j] = z[idx[j]];
      rs[j] = r[idx[j]];
    }
    const double value = optimistic_revenue(zs, rs);
    if (value > best_value ||
        (value == best_value && idx < best.item_indices)) {
      best_value = value;
      best.item_indices = idx;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("choice probabilities: zero parameter is uniform over S and 0") {
  const int k = 7;
  std::vector<Vector> items(k, Vector::Random(4));
  RoundContext ctx = make_ctx(items, Vector::Ones(k));
  ModelParameter theta{Vector::Zero(4)};
  Vector p = choice_probabilities(ctx, all_items(k), theta);
  REQUIRE(p.size() == k + 1);
  for (int j = 0; j <= k; ++j) {
    CHECK(p[j] == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
  }
}

TEST_CASE("choice probabilities: closed forms") {
  ModelParameter theta{Vector::Ones(1)};
  SUBCASE("single item with utility ln 3") {
    RoundContext ctx = make_ctx({Vector::Constant(1, std::log(3.0))},
                                Vector::Ones(1));
    Vector p = choice_probabilities(ctx, all_items(1), theta);
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("two items with utilities ln 2, ln 3") {
    RoundContext ctx = make_ctx({Vector::Constant(1, std::log(2.0)),
                                 Vector::Constant(1, std::log(3.0))},
                                Vector::Ones(2));
    Vector p = choice_probabilities(ctx, all_items(2), theta);
    CHECK(p[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  }
}

TEST_CASE("choice probabilities: errors and overflow safety") {
  RoundContext ctx = make_ctx({Vector::Ones(3)}, Vector::Ones(1));
  CHECK_THROWS_AS(
      choice_probabilities(ctx, all_items(1), ModelParameter{Vector::Ones(2)}),
      std::invalid_argument);
  Assortment bad;
  bad.item_indices = {5};
  CHECK_THROWS_AS(
      choice_probabilities(ctx, bad, ModelParameter{Vector::Ones(3)}),
      std::out_of_range);

  // |utility| around 900 would overflow a raw exponential.
  ModelParameter huge{Vector::Constant(3, 300.0)};
  Vector p = choice_probabilities(ctx, all_items(1), huge);
  CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isfinite(p[0]));
}

TEST_CASE("probabilities sum to one on fuzz cases") {
  RngStream rng(12345);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_below(6));
    const int n = 2 + static_cast<int>(rng.uniform_below(8));
    std::vector<Vector> items;
    for (int i = 0; i < n; ++i) {
      Vector x(d);
      for (int j = 0; j < d; ++j) x[j] = 3.0 * rng.normal();
      items.push_back(x);
    }
    Vector theta(d);
    for (int j = 0; j < d; ++j) theta[j] = 3.0 * rng.normal();
    RoundContext ctx = make_ctx(items, Vector::Ones(n));
    Vector p = choice_probabilities(ctx, all_items(n),
                                    ModelParameter{theta});
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("monotone likelihood: raising one utility shifts mass toward it") {
  RngStream rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 3;
    const int n = 4;
    std::vector<Vector> items;
    for (int i = 0; i < n; ++i) {
      Vector x(d);
      for (int j = 0; j < d; ++j) x[j] = rng.normal();
      items.push_back(x);
    }
    Vector theta(d);
    for (int j = 0; j < d; ++j) theta[j] = rng.normal();
    RoundContext ctx = make_ctx(items, Vector::Ones(n));
    Vector before = choice_probabilities(ctx, all_items(n),
                                         ModelParameter{theta});

    const int bumped = static_cast<int>(rng.uniform_below(n));
    ctx.items[bumped] += theta / std::max(1e-9, theta.squaredNorm());
    Vector after = choice_probabilities(ctx, all_items(n),
                                        ModelParameter{theta});
    CHECK(after[bumped + 1] >= before[bumped + 1] - 1e-12);
    for (int j = 0; j <= n; ++j) {
      if (j != bumped + 1) CHECK(after[j] <= before[j] + 1e-12);
    }
  }
}

TEST_CASE("sample_choice: degenerate, determinism, chi-square fit") {
  SUBCASE("degenerate distribution") {
    Vector p(3);
    p << 1.0, 0.0, 0.0;
    RngStream rng(9);
    for (int i = 0; i < 50; ++i) {
      ChoiceOutcome y = sample_choice(p, rng);
      CHECK(y.slot == 0);
      CHECK(y.one_hot[0] == 1.0);
      CHECK(y.one_hot.sum() == 1.0);
    }
  }
  SUBCASE("non-normalized input rejected") {
    Vector p(2);
    p << 0.6, 0.5;
    RngStream rng(9);
    CHECK_THROWS_AS(sample_choice(p, rng), std::invalid_argument);
  }
  SUBCASE("same seed, same sequence") {
    Vector p(3);
    p << 0.5, 0.25, 0.25;
    RngStream a(42), b(42);
    for (int i = 0; i < 200; ++i) {
      CHECK(sample_choice(p, a).slot == sample_choice(p, b).slot);
    }
  }
  SUBCASE("chi-square goodness of fit at level 0.001") {
    Vector p(3);
    p << 0.5, 0.25, 0.25;
    RngStream rng(2024);
    const int n = 100000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) counts[sample_choice(p, rng).slot]++;
    double chi2 = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double expected = n * p[j];
      chi2 += (counts[j] - expected) * (counts[j] - expected) / expected;
    }
    // chi-square(2) critical value at 0.001
    CHECK(chi2 < 13.8155);
  }
}

TEST_CASE("expected revenue: closed forms") {
  SUBCASE("uniform revenue 1, zero parameter, |S| = 10") {
    std::vector<Vector> items(10, Vector::Random(3));
    RoundContext ctx = make_ctx(items, Vector::Ones(10));
    CHECK(expected_revenue(ctx, all_items(10), ModelParameter{Vector::Zero(3)}) ==
          doctest::Approx(10.0 / 11).epsilon(1e-12));
  }
  SUBCASE("zero revenues") {
    std::vector<Vector> items(4, Vector::Random(3));
    RoundContext ctx = make_ctx(items, Vector::Zero(4));
    CHECK(expected_revenue(ctx, all_items(4), ModelParameter{Vector::Random(3)}) ==
          doctest::Approx(0.0));
  }
  SUBCASE("antisymmetric revenues cancel at equal utilities") {
    Vector r(2);
    r << 1.0, -1.0;
    RoundContext ctx = make_ctx({Vector::Constant(1, std::log(2.0)),
                                 Vector::Constant(1, std::log(2.0))},
                                r);
    CHECK(expected_revenue(ctx, all_items(2), ModelParameter{Vector::Ones(1)}) ==
          doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("optimistic revenue: closed forms and saturation") {
  SUBCASE("uniform z = 0, r = 1") {
    for (int k : {1, 5, 10}) {
      CHECK(optimistic_revenue(Vector::Zero(k), Vector::Ones(k)) ==
            doctest::Approx(double(k) / (k + 1)).epsilon(1e-12));
    }
  }
  SUBCASE("huge utility saturates to the revenue without overflow") {
    CHECK(optimistic_revenue(Vector::Constant(1, 1000.0), Vector::Ones(1)) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("z = (ln 2, ln 3), r = 1") {
    Vector z(2);
    z << std::log(2.0), std::log(3.0);
    CHECK(optimistic_revenue(z, Vector::Ones(2)) ==
          doctest::Approx(5.0 / 6).epsilon(1e-12));
  }
}

TEST_CASE("optimistic revenue at z = x.theta equals expected revenue exactly") {
  RngStream rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4, n = 6;
    std::vector<Vector> items;
    Vector r(n);
    for (int i = 0; i < n; ++i) {
      Vector x(d);
      for (int j = 0; j < d; ++j) x[j] = rng.normal();
      items.push_back(x);
      r[i] = 2.0 * rng.uniform01() - 1.0;
    }
    Vector theta(d);
    for (int j = 0; j < d; ++j) theta[j] = rng.normal();
    RoundContext ctx = make_ctx(items, r);
    Vector z(n);
    for (int i = 0; i < n; ++i) z[i] = items[i].dot(theta);
    CHECK(expected_revenue(ctx, all_items(n), ModelParameter{theta}) ==
          optimistic_revenue(z, r));
  }
}

TEST_CASE("best assortment: examples") {
  SUBCASE("uniform revenue top-K vs brute force on a fixed instance") {
    Vector z(4);
    z << 2.0, 1.0, 0.0, -1.0;
    Assortment s = best_assortment(z, Vector::Ones(4), 2);
    CHECK(s.item_indices == std::vector<int>{0, 1});
    Assortment brute =
        best_assortment(z, Vector::Ones(4), 2, AssortmentMode::kBruteForce);
    CHECK(brute.item_indices == s.item_indices);
    CHECK(exhaustive_argmax(z, Vector::Ones(4), 2).item_indices ==
          s.item_indices);
  }
  SUBCASE("K = N with unit revenues takes the full catalog") {
    Vector z(5);
    z << -3.0, 0.5, 2.0, -1.0, 0.0;
    Assortment s = best_assortment(z, Vector::Ones(5), 5);
    CHECK(s.item_indices == std::vector<int>{0, 1, 2, 3, 4});
  }
  SUBCASE("heterogeneous revenues pick the profitable singleton") {
    Vector z(2), r(2);
    z << 0.0, 10.0;
    r << 1.0, 0.01;
    // Direct two-subset oracle: r0/(1+1) = 0.5 beats ~0.01.
    const double v0 =
        optimistic_revenue(Vector::Constant(1, 0.0), Vector::Constant(1, 1.0));
    const double v1 = optimistic_revenue(Vector::Constant(1, 10.0),
                                         Vector::Constant(1, 0.01));
    REQUIRE(v0 > v1);
    Assortment s = best_assortment(z, r, 1);
    CHECK(s.item_indices == std::vector<int>{0});
  }
  SUBCASE("oversized brute-force instance is rejected") {
    Vector z = Vector::Zero(40);
    Vector r = Vector::Ones(40);
    r[0] = 0.5;  // breaks the uniform-revenue fast path
    CHECK_THROWS_WITH_AS(best_assortment(z, r, 12),
                         doctest::Contains("unsupported instance"),
                         std::runtime_error);
  }
}

TEST_CASE("fast path matches exhaustive search for all N <= 12, uniform r") {
  RngStream rng(31);
  for (int n = 1; n <= 12; ++n) {
    for (int k = 1; k <= n; ++k) {
      Vector z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      Assortment fast = best_assortment(z, Vector::Ones(n), k);
      Assortment brute =
          best_assortment(z, Vector::Ones(n), k, AssortmentMode::kBruteForce);
      CHECK(fast.item_indices == brute.item_indices);
    }
  }
}

TEST_CASE("top-K choice is invariant to utility shifts") {
  RngStream rng(66);
  Vector z(8);
  for (int i = 0; i < 8; ++i) z[i] = rng.normal();
  Assortment base = best_assortment(z, Vector::Ones(8), 3);
  for (double shift : {-5.0, 1.0, 40.0}) {
    Assortment shifted =
        best_assortment(z.array() + shift, Vector::Ones(8), 3);
    CHECK(shifted.item_indices == base.item_indices);
  }
}
