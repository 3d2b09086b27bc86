#include "liabval/cashflows.hpp"

#include <cmath>

#include "liabval/errors.hpp"

namespace liabval {

NodeValues CashflowSet::residual(const Eigen::VectorXd& weights) const {
  if (weights.size() != instruments.cols()) {
    throw ArgumentError("weight vector length " + std::to_string(weights.size()) +
                        " does not match instrument count " +
                        std::to_string(instruments.cols()));
  }
  if (weights.size() == 0) return liability;
  return liability - instruments * weights;
}

NodeValues CashflowSet::lifted(const Eigen::VectorXd& w) const {
  if (w.size() != instruments.cols() + 1) {
    throw ArgumentError("lifted direction must have m+1 components");
  }
  NodeValues out = w[0] * liability;
  if (instruments.cols() > 0) out -= instruments * w.tail(instruments.cols());
  return out;
}

NodeValues CashflowSet::replication(const Eigen::VectorXd& weights) const {
  if (weights.size() != instruments.cols()) {
    throw ArgumentError("weight vector length does not match instrument count");
  }
  if (weights.size() == 0) return NodeValues::Zero(liability.size());
  return instruments * weights;
}

void check_flow(const ScenarioTree& tree, const NodeValues& flows) {
  if (static_cast<std::size_t>(flows.size()) != tree.size()) {
    throw DataError("flow vector has " + std::to_string(flows.size()) + " entries for " +
                    std::to_string(tree.size()) + " nodes");
  }
  if (flows[0] != 0.0) throw DataError("the root node carries no flow");
  for (Eigen::Index i = 1; i < flows.size(); ++i) {
    if (!std::isfinite(flows[i])) {
      throw DataError("missing or non-finite flow at node '" +
                      tree.node(static_cast<NodeId>(i)).label + "'");
    }
  }
}

void check_cashflows(const ScenarioTree& tree, const CashflowSet& flows) {
  check_flow(tree, flows.liability);
  if (static_cast<std::size_t>(flows.instruments.rows()) != tree.size()) {
    throw DataError("instrument matrix row count does not match the tree");
  }
  for (Eigen::Index k = 0; k < flows.instruments.cols(); ++k) {
    check_flow(tree, flows.instruments.col(k));
  }
}

Eigen::VectorXd pathwise_sum(const ScenarioTree& tree, const NodeValues& flows,
                             const std::vector<NodeId>& leaves) {
  // Cumulative sums in id (= breadth-first) order, then read off the leaves.
  NodeValues cum = NodeValues::Zero(flows.size());
  for (NodeId id = 1; id < tree.size(); ++id) {
    auto i = static_cast<Eigen::Index>(id);
    cum[i] = cum[static_cast<Eigen::Index>(*tree.node(id).parent)] + flows[i];
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(leaves.size()));
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = cum[static_cast<Eigen::Index>(leaves[k])];
  }
  return out;
}

}  // namespace liabval
