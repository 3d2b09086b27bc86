#pragma once

#include <vector>

#include "liabval/risk_measure.hpp"
#include "liabval/scenario_tree.hpp"

namespace liabval {

// Per-node output of the coupled backward recursion
//   R_t = rho_t(-X_{t+1} - V_{t+1}),
//   C_t = E^Q_t[(R_t - X_{t+1} - V_{t+1})_+],
//   V_t = R_t - C_t,
// with V_T = C_T = R_T = 0.
struct ValuationResult {
  NodeValues v;  // residual liability value
  NodeValues c;  // value of the reference undertaking (owner's claim)
  NodeValues r;  // capital requirement
  // At t >= 1: R_{t-1} - X_t - V_t < 0, i.e. the owner walks away here.
  std::vector<bool> defaulted;

  double v0() const { return v[0]; }
  double c0() const { return c[0]; }
  double r0() const { return r[0]; }
};

ValuationResult backward_valuation(const ScenarioTree& tree, const NodeValues& residual,
                                   const RiskMeasureSpec& spec);

// gamma_t(Y) = E^Q_t[(rho_t(-Y) - Y)_+] at every time-t node, Y on layer t+1.
NodeValues gamma_step(const ScenarioTree& tree, const NodeValues& y, int t,
                      const RiskMeasureSpec& spec);

// phi_t(Y) = rho_t(-Y) - gamma_t(Y) at every time-t node.
NodeValues phi_step(const ScenarioTree& tree, const NodeValues& y, int t,
                    const RiskMeasureSpec& spec);

// phi_t o ... o phi_{T-1} applied to a quantity given on the leaves; the
// result is populated on layer t.
NodeValues compose_phi(const ScenarioTree& tree, const NodeValues& leaf_values, int t,
                       const RiskMeasureSpec& spec);

// L_t = E^Q_t[sum_{s>t} X^r_s] + V_t; `result` must come from X^o - X^r.
NodeValues liability_value(const ScenarioTree& tree, const NodeValues& liability,
                           const NodeValues& replication, const ValuationResult& result);

// eta_t = E^P_t[(R_t - X_{t+1} - V_{t+1})_+] / E^Q_t[(.)_+] - 1 at non-leaf
// nodes. NaN marks nodes where C_t = 0 and the ratio is undefined.
NodeValues cost_of_capital_rates(const ScenarioTree& tree, const ValuationResult& result,
                                 const NodeValues& residual);

// Nonrandom valuation for period-wise independent flows. Period s has atoms
// with P-probabilities `p` and Q-probabilities `q` (same support).
struct PeriodLaw {
  std::vector<double> values;
  std::vector<double> p;
  std::vector<double> q;
};

struct DeterministicValuation {
  std::vector<double> v;  // t = 0..T
  std::vector<double> c;
  std::vector<double> r;
};

DeterministicValuation iid_closed_form(const std::vector<PeriodLaw>& periods,
                                       const RiskMeasureSpec& spec);

// Normal period law: N(mean_p, sd^2) under P and N(mean_q, sd^2) under Q.
struct NormalPeriodLaw {
  double mean_p = 0.0;
  double mean_q = 0.0;
  double sd = 0.0;
};

DeterministicValuation iid_closed_form(const std::vector<NormalPeriodLaw>& periods,
                                       const RiskMeasureSpec& spec);

}  // namespace liabval
