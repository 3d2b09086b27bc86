#pragma once

#include <vector>

#include "liabval/cashflows.hpp"
#include "liabval/scenario_tree.hpp"

namespace liabval::testing {

// Root with two children "up"/"down" at time 1.
inline ScenarioTree two_leaf_tree(double p_up = 0.5, double d_up = 1.0, double d_down = 1.0) {
  return ScenarioTree::from_specs({{"root", std::nullopt, 0, 1.0, 1.0},
                                   {"up", "root", 1, p_up, d_up},
                                   {"down", "root", 1, 1.0 - p_up, d_down}});
}

inline NodeValues node_values(std::initializer_list<double> v) {
  NodeValues out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline CashflowSet flows_without_instruments(const NodeValues& x) {
  return CashflowSet{x, Eigen::MatrixXd::Zero(x.size(), 0)};
}

}  // namespace liabval::testing
