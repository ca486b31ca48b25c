#include "dpmnl/accountant.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "dpmnl/csv.hpp"

namespace dpmnl {

ZcdpBudget compose_zcdp(std::span<const ZcdpBudget> budgets) {
  if (budgets.empty()) {
    throw std::invalid_argument("compose_zcdp: empty budget list");
  }
  double rho = 0.0;
  for (const auto& b : budgets) rho += b.rho;
  return {rho};
}

EpsDeltaBudget zcdp_to_eps_delta(double rho, double delta) {
  if (rho <= 0.0) throw std::invalid_argument("zcdp_to_eps_delta: rho <= 0");
  if (delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("zcdp_to_eps_delta: delta outside (0,1)");
  }
  return {rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta)), delta};
}

double zcdp_to_epsilon_alt(double rho, double horizon) {
  if (rho <= 0.0 || horizon < 1.0) {
    throw std::invalid_argument("zcdp_to_epsilon_alt: bad arguments");
  }
  return rho + 4.0 * rho * std::log(horizon);
}

double gaussian_sigma_for_zcdp(double sensitivity, double rho) {
  if (sensitivity <= 0.0 || rho <= 0.0) {
    throw std::invalid_argument(
        "gaussian_sigma_for_zcdp: nonpositive sensitivity or rho");
  }
  return sensitivity / std::sqrt(2.0 * rho);
}

EpsDeltaBudget per_call_mle_budget_epsdelta(double eps1, double delta1,
                                            int d_mle) {
  if (eps1 <= 0.0 || delta1 <= 0.0 || delta1 >= 1.0) {
    throw std::invalid_argument("per_call_mle_budget_epsdelta: bad budget");
  }
  if (d_mle < 1) {
    throw std::invalid_argument("per_call_mle_budget_epsdelta: D_MLE < 1");
  }
  const double eps =
      eps1 / std::sqrt(8.0 * d_mle * std::log(1.0 / delta1));
  return {eps, delta1 / (2.0 * d_mle)};
}

EpsDeltaBudget basic_compose_epsdelta(std::span<const EpsDeltaBudget> budgets) {
  if (budgets.empty()) {
    throw std::invalid_argument("basic_compose_epsdelta: empty budget list");
  }
  EpsDeltaBudget total;
  for (const auto& b : budgets) {
    total.epsilon += b.epsilon;
    total.delta += b.delta;
  }
  return total;
}

void PrivacyLedger::charge(std::string event, std::string mechanism,
                           double rho_or_eps, double delta) {
  total_ += rho_or_eps;
  total_delta_ += delta;
  entries_.push_back({std::move(event), std::move(mechanism), rho_or_eps,
                      delta, total_});
}

void PrivacyLedger::write_csv(std::ostream& out) const {
  out << "event,mechanism,rho_or_eps,delta,cumulative\n";
  for (const auto& e : entries_) {
    out << csv_escape(e.event) << ',' << csv_escape(e.mechanism) << ','
        << format_double(e.rho_or_eps) << ',' << format_double(e.delta) << ','
        << format_double(e.cumulative) << '\n';
  }
}

}  // namespace dpmnl
