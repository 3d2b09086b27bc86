#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liabval/cashflows.hpp"
#include "liabval/optimize.hpp"
#include "liabval/risk_measure.hpp"
#include "liabval/scenario_tree.hpp"

namespace liabval {

// Probability of every node seen from the root under `m`.
NodeValues node_weights(const ScenarioTree& tree, Measure m);

struct WeightSolution {
  Eigen::VectorXd v_hat;
  double objective = 0.0;
};

// Sum of squares form:  min_v sum_t E[(X^o_t - v^T X^f_t)^2], solved exactly
// by a rank-revealing QR of the weighted design (same solution as the normal
// equations). Root form: min_v sum_t E[(.)^2]^{1/2}, by simplex search seeded
// at the sum-of-squares solution. Throws DegeneracyError naming dependent
// instruments when the normal-equations matrix is singular.
WeightSolution cashflow_match(const ScenarioTree& tree, const CashflowSet& flows, Measure m,
                              bool root_form);

// min_v E[(sum_t (X^o_t - v^T X^f_t))^2]^{1/2} via the Gram matrix of the summed
// instrument flows. Throws DegeneracyError when its condition number is 1e12
// or more.
WeightSolution terminal_value_match(const ScenarioTree& tree, const CashflowSet& flows, Measure m);

// E^Q_0[max_{t<T} C_t] with the maximum taken along each root-to-leaf path.
double expected_pathwise_max(const ScenarioTree& tree, const NodeValues& c);

// psi(v) for the residual X^o - v^T X^f.
double psi_objective(const ScenarioTree& tree, const CashflowSet& flows, const RiskMeasureSpec& spec,
                     const Eigen::VectorXd& v);

// psi evaluated on the lifted flow w^T Z, Z_t = (X^o_t, -X^f_t); psi(v) = psi~((1, v)).
double psi_tilde(const ScenarioTree& tree, const CashflowSet& flows, const RiskMeasureSpec& spec,
                 const Eigen::VectorXd& w);

struct DegenerateDirection {
  Eigen::VectorXd w;
  std::string source;  // "axis", "random" or "kernel"
  double max_gap = 0.0;  // largest R~_{t} - X~_{t+1} - R~_{t+1} over nodes
  // w_1 == 0: a portfolio of instruments alone; psi is then not coercive in v.
  // Otherwise v = w_{2..}/w_1 has psi(v) = 0 when w_1 > 0.
  bool instrument_only = false;
};

struct WellposedReport {
  std::vector<DegenerateDirection> degenerate;
  std::size_t directions_checked = 0;
  // min of psi~ over the unit probe directions with w_1 = 0 (inf when m = 0)
  double smallest_instrument_psi = 0.0;
  bool ok() const noexcept { return degenerate.empty(); }
  bool coercive() const noexcept;
  std::vector<std::string> messages() const;
};

// Probes w in {+-axes, 32 seeded random unit vectors (plus 16 with w_1 = 0),
// +-kernel basis of the P-covariance of sum_t Z_t}; a direction is degenerate when
// R~_t - X~_{t+1} - R~_{t+1} <= tol at every node, with
// R~_t = rho_t(-X~_{t+1} - R~_{t+1}), R~_T = 0, X~ = w^T Z.
WellposedReport check_wellposed(const ScenarioTree& tree, const CashflowSet& flows,
                                const RiskMeasureSpec& spec, std::uint64_t seed = 0x5eed);

struct PsiMinimum {
  Eigen::VectorXd v_hat;
  double objective = 0.0;
  std::vector<Eigen::VectorXd> ties;
  bool converged = true;
  std::size_t probes_checked = 0;
  double search_radius = 0.0;
  WellposedReport report;
};

// Refuses (DegeneracyError) when check_wellposed finds a degenerate direction
// inside the instrument subspace. Degenerate directions with w_1 > 0 are exact
// hedges and are used as extra seeds.
PsiMinimum minimize_psi(const ScenarioTree& tree, const CashflowSet& flows, const RiskMeasureSpec& spec,
                        const MinimizeOptions& options = {}, std::uint64_t seed = 0x5eed);

}  // namespace liabval
