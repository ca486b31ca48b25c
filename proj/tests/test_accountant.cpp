#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "dpmnl/accountant.hpp"
#include "dpmnl/rng.hpp"

using namespace dpmnl;

TEST_CASE("zCDP composition is additive") {
  std::array<ZcdpBudget, 2> pair = {{{0.3}, {0.7}}};
  CHECK(compose_zcdp(pair).rho == doctest::Approx(1.0).epsilon(1e-15));

  std::array<ZcdpBudget, 1> single = {{{0.42}}};
  CHECK(compose_zcdp(single).rho == 0.42);

  const int d_mle = 7;
  std::vector<ZcdpBudget> calls(d_mle, ZcdpBudget{1.3 / d_mle});
  CHECK(compose_zcdp(calls).rho == doctest::Approx(1.3).epsilon(1e-12));

  CHECK_THROWS_AS(compose_zcdp({}), std::invalid_argument);
}

TEST_CASE("zCDP composition is associative and commutative") {
  RngStream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ZcdpBudget> budgets;
    for (int i = 0; i < 5; ++i) budgets.push_back({rng.uniform01() + 0.01});
    const double forward = compose_zcdp(budgets).rho;
    std::reverse(budgets.begin(), budgets.end());
    CHECK(compose_zcdp(budgets).rho == doctest::Approx(forward).epsilon(1e-12));

    std::array<ZcdpBudget, 2> grouped = {
        {{budgets[0].rho + budgets[1].rho},
         {budgets[2].rho + budgets[3].rho + budgets[4].rho}}};
    CHECK(compose_zcdp(grouped).rho ==
          doctest::Approx(forward).epsilon(1e-12));
  }
}

TEST_CASE("zCDP to (eps, delta) conversion") {
  // 0.5 + 2*sqrt(0.5*ln(1e4)), frozen from an independent evaluation.
  EpsDeltaBudget b = zcdp_to_eps_delta(0.5, 1e-4);
  CHECK(b.epsilon == doctest::Approx(4.791932052578694).epsilon(1e-13));
  CHECK(b.delta == 1e-4);

  SUBCASE("vanishes as rho -> 0+") {
    CHECK(zcdp_to_eps_delta(1e-12, 0.01).epsilon < 1e-5);
  }
  SUBCASE("delta = 1/T^2 matches the two-log-T form") {
    const double t = 1e4;
    const double rho = 0.8;
    EpsDeltaBudget at_t2 = zcdp_to_eps_delta(rho, 1.0 / (t * t));
    CHECK(at_t2.epsilon ==
          doctest::Approx(rho + 2.0 * std::sqrt(2.0 * rho * std::log(t)))
              .epsilon(1e-12));
  }
  SUBCASE("strictly increasing in rho and in ln(1/delta)") {
    CHECK(zcdp_to_eps_delta(0.5, 1e-4).epsilon <
          zcdp_to_eps_delta(0.6, 1e-4).epsilon);
    CHECK(zcdp_to_eps_delta(0.5, 1e-4).epsilon <
          zcdp_to_eps_delta(0.5, 1e-5).epsilon);
  }
  SUBCASE("domain checks") {
    CHECK_THROWS_AS(zcdp_to_eps_delta(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(zcdp_to_eps_delta(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(zcdp_to_eps_delta(0.5, 1.0), std::invalid_argument);
  }
}

TEST_CASE("gaussian mechanism calibration") {
  CHECK(gaussian_sigma_for_zcdp(std::sqrt(2.0), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-15));
  // sensitivity sqrt(2K) with K = 8 at rho = 2: sqrt(16)/sqrt(4)
  CHECK(gaussian_sigma_for_zcdp(4.0, 2.0) == doctest::Approx(2.0));
  CHECK(gaussian_sigma_for_zcdp(2.0, 0.7) ==
        doctest::Approx(2.0 * gaussian_sigma_for_zcdp(1.0, 0.7)));
  CHECK_THROWS_AS(gaussian_sigma_for_zcdp(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_sigma_for_zcdp(1.0, -1.0), std::invalid_argument);

  SUBCASE("round trip: rho = sensitivity^2 / (2 sigma^2)") {
    RngStream rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const double sens = rng.uniform01() * 5 + 0.1;
      const double rho = rng.uniform01() * 3 + 0.01;
      const double sigma = gaussian_sigma_for_zcdp(sens, rho);
      CHECK(sens * sens / (2.0 * sigma * sigma) ==
            doctest::Approx(rho).epsilon(1e-12));
    }
  }
}

TEST_CASE("per-call MLE budget under advanced composition") {
  const double eps1 = 2.0;
  SUBCASE("single call at delta = 1/e") {
    EpsDeltaBudget b = per_call_mle_budget_epsdelta(eps1, std::exp(-1.0), 1);
    CHECK(b.epsilon == doctest::Approx(eps1 / std::sqrt(8.0)).epsilon(1e-13));
    CHECK(b.delta == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-13));
  }
  SUBCASE("epsilon shrinks as 1/sqrt(D)") {
    const double one = per_call_mle_budget_epsdelta(eps1, 1e-4, 1).epsilon;
    const double four = per_call_mle_budget_epsdelta(eps1, 1e-4, 4).epsilon;
    CHECK(four == doctest::Approx(one / 2.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(per_call_mle_budget_epsdelta(1.0, 0.5, 0),
                  std::invalid_argument);
}

TEST_CASE("basic (eps, delta) composition sums both budgets") {
  std::array<EpsDeltaBudget, 2> pair = {{{1.0, 1e-5}, {0.5, 1e-6}}};
  EpsDeltaBudget total = basic_compose_epsdelta(pair);
  CHECK(total.epsilon == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(total.delta == doctest::Approx(1.1e-5).epsilon(1e-12));

  std::array<EpsDeltaBudget, 1> single = {{{0.7, 1e-4}}};
  CHECK(basic_compose_epsdelta(single).epsilon == 0.7);

  std::array<EpsDeltaBudget, 3> zeros = {{{0, 0}, {0, 0}, {0, 0}}};
  CHECK(basic_compose_epsdelta(zeros).epsilon == 0.0);
  CHECK(basic_compose_epsdelta(zeros).delta == 0.0);
}

TEST_CASE("privacy ledger accumulates charges and serializes") {
  PrivacyLedger ledger;
  CHECK(ledger.total() == 0.0);

  const double rho1 = 0.9, rho2 = 0.1;
  const int cap = 4;
  ledger.charge("tree", "gaussian-tree-zcdp", rho2);
  for (int call = 0; call < cap; ++call) {
    ledger.charge("mle", "objective-perturbation-zcdp", rho1 / cap);
  }
  CHECK(ledger.total() == doctest::Approx(rho1 + rho2).epsilon(1e-12));
  CHECK(ledger.entries().size() == cap + 1);
  CHECK(ledger.entries().back().cumulative == doctest::Approx(ledger.total()));

  std::ostringstream out;
  ledger.write_csv(out);
  const std::string text = out.str();
  CHECK(text.rfind("event,mechanism,rho_or_eps,delta,cumulative\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == cap + 2);
}
