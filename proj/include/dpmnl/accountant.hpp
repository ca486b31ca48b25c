#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dpmnl {

struct ZcdpBudget {
  double rho = 0.0;
};

struct EpsDeltaBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

// rho_total split between PrivateMLE (rho1) and PrivateCov (rho2).
struct BudgetSplit {
  double rho_total = 0.0;
  double mle_fraction = 0.0;  // in (0,1)

  double rho1() const { return rho_total * mle_fraction; }
  double rho2() const { return rho_total - rho1(); }
};

// Additive zCDP composition.
ZcdpBudget compose_zcdp(std::span<const ZcdpBudget> budgets);

// rho-zCDP implies (rho + 2*sqrt(rho*ln(1/delta)), delta)-DP.
EpsDeltaBudget zcdp_to_eps_delta(double rho, double delta);

// Looser in-text variant (epsilon = rho + 4*rho*ln T); kept behind an
// explicit call for comparison runs, not used by default.
double zcdp_to_epsilon_alt(double rho, double horizon);

// Gaussian mechanism: rho = sensitivity^2 / (2*sigma^2).
double gaussian_sigma_for_zcdp(double sensitivity, double rho);

// Per-call budget so that D_MLE advanced-composed calls stay within
// (eps1, ~delta1): (eps1 / sqrt(8*D*ln(1/delta1)), delta1 / (2*D)).
EpsDeltaBudget per_call_mle_budget_epsdelta(double eps1, double delta1,
                                            int d_mle);

// Basic composition: sum epsilons, sum deltas.
EpsDeltaBudget basic_compose_epsdelta(std::span<const EpsDeltaBudget> budgets);

// Append-only audit of every budget charge within one run. Rows carry the
// zCDP rho or the DP epsilon in one column; delta is zero for zCDP rows.
class PrivacyLedger {
 public:
  struct Entry {
    std::string event;
    std::string mechanism;
    double rho_or_eps = 0.0;
    double delta = 0.0;
    double cumulative = 0.0;
  };

  void charge(std::string event, std::string mechanism, double rho_or_eps,
              double delta = 0.0);

  double total() const { return total_; }
  double total_delta() const { return total_delta_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // CSV with header: event,mechanism,rho_or_eps,delta,cumulative
  void write_csv(std::ostream& out) const;

 private:
  std::vector<Entry> entries_;
  double total_ = 0.0;
  double total_delta_ = 0.0;
};

}  // namespace dpmnl
