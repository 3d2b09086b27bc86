#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "liabval/cashflows.hpp"
#include "liabval/gaussian_model.hpp"
#include "liabval/scenario_tree.hpp"
#include "liabval/stopping.hpp"
#include "liabval/valuation.hpp"

namespace liabval {

struct RandomTreeOptions {
  int min_horizon = 1;
  int max_horizon = 4;
  int max_branching = 3;
  std::size_t max_decision_nodes = kEnumerationGuard;
  int instruments = 0;
  bool random_density = true;  // D == 1 otherwise
  double flow_step = 0.0;      // > 0 rounds flows to this grid (creates ties)
};

struct SyntheticCase {
  ScenarioTree tree;
  CashflowSet flows;
};

// Random tree with random P, a random martingale density and normal flows.
// The number of non-root nodes never exceeds max_decision_nodes, so the root
// stays within the stopping-time enumeration guard.
SyntheticCase random_case(std::mt19937_64& rng, const RandomTreeOptions& options = {});

// Product tree of independent periods: the node for atom k of period s has
// P-branch probability p_k, density multiplied by q_k / p_k and flow x_k.
SyntheticCase product_case(const std::vector<PeriodLaw>& periods);

struct RandomModelOptions {
  int max_dimension = 3;
  int max_horizon = 3;
  int instruments = -1;         // -1: random in 0..n-1
  bool block_diagonal = false;  // B_{t,s} = 0 for s < t
  double girsanov_scale = 0.5;
};

// Random Gaussian model with well-conditioned diagonal loadings.
GaussianModel<double> random_gaussian_model(std::mt19937_64& rng,
                                            const RandomModelOptions& options = {});

}  // namespace liabval
