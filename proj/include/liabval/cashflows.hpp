#pragma once

#include <Eigen/Dense>

#include "liabval/scenario_tree.hpp"

namespace liabval {

// Discounted per-node flows: the liability X^o and the m instrument flows X^f.
// Row k belongs to node k; the root row is identically zero.
struct CashflowSet {
  NodeValues liability;         // X^o
  Eigen::MatrixXd instruments;  // X^f, one column per instrument

  Eigen::Index instrument_count() const noexcept { return instruments.cols(); }

  // X^v = X^o - X^f v.
  NodeValues residual(const Eigen::VectorXd& weights) const;

  // Lifted flow w^T Z with Z_t = (X^o_t, -X^f_t): w_1 X^o - X^f w_{2..m+1}.
  NodeValues lifted(const Eigen::VectorXd& w) const;

  // Replication flow X^r = X^f v.
  NodeValues replication(const Eigen::VectorXd& weights) const;
};

// Throws DataError unless the shapes match the tree, the root row is zero and
// every other entry is finite.
void check_cashflows(const ScenarioTree& tree, const CashflowSet& flows);

// Throws DataError unless `flows` has one finite entry per node and a zero root.
void check_flow(const ScenarioTree& tree, const NodeValues& flows);

// Sum of a flow along the path from the root to each leaf; entry k of the
// result belongs to leaves[k].
Eigen::VectorXd pathwise_sum(const ScenarioTree& tree, const NodeValues& flows,
                             const std::vector<NodeId>& leaves);

}  // namespace liabval
