#pragma once

#include <cstddef>
#include <map>

#include "liabval/scenario_tree.hpp"
#include "liabval/valuation.hpp"

namespace liabval {

// A default time started at node `start` (time t), given scenario-wise: each
// leaf below `start` maps to a label in {t+1, ..., T+1}; T+1 means full runoff.
struct StoppingTime {
  NodeId start = 0;
  std::map<NodeId, int> at_leaf;
};

// tau*_t = inf{s > t : R_{s-1} - X_s - V_s < 0} ^ (T+1) along every path from
// `start`. A start node at the horizon yields an empty map.
StoppingTime optimal_default_time(const ScenarioTree& tree, const ValuationResult& result,
                                  NodeId start);

enum class Objective { owner, policyholder };

// Owner:        E^Q_t[ sum_{s=t+1}^{tau-1} (R_{s-1} - R_s - X_s) ]
// Policyholder: E^Q_t[ sum_{s=t+1}^{tau-1} X_s + R_{tau-1} ]
// Throws MeasurabilityError when tau is not adapted to the tree.
double stopping_value(const ScenarioTree& tree, const NodeValues& requirement,
                      const NodeValues& residual, const StoppingTime& tau, Objective objective);

// Throws MeasurabilityError unless tau covers exactly the leaves below its start
// node with labels in range and {tau <= s} is decided at every time-s node.
void check_adapted(const ScenarioTree& tree, const StoppingTime& tau);

inline constexpr std::size_t kEnumerationGuard = 24;

struct StoppingEnumeration {
  double owner_sup = 0.0;
  double policyholder_inf = 0.0;
  StoppingTime owner_argmax;       // the largest optimal rule
  StoppingTime policyholder_argmin;
  std::size_t rules = 0;           // adapted rules enumerated
  std::size_t decision_nodes = 0;
};

// Exhaustive search over every adapted default time in S_{t+1,T+1} for the
// subtree at `start`. Throws GuardError when the subtree has more than
// `guard` decision nodes.
StoppingEnumeration enumerate_optimal_stopping(const ScenarioTree& tree, NodeId start,
                                               const NodeValues& requirement,
                                               const NodeValues& residual,
                                               std::size_t guard = kEnumerationGuard);

}  // namespace liabval
