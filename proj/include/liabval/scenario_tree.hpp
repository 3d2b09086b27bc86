#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace liabval {

using NodeId = std::size_t;

// One value per tree node, indexed by NodeId.
using NodeValues = Eigen::VectorXd;

enum class Measure { P, Q };

// Absolute tolerance for probability sums and the martingale property of D.
inline constexpr double kProbabilityTolerance = 1e-12;

struct Node {
  int time = 0;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
  double branch_prob = 1.0;  // P(this node | parent)
  double density = 1.0;      // D_t at this node
  std::string label;
};

// Input record for tree construction; parents are referenced by label.
struct NodeSpec {
  std::string label;
  std::optional<std::string> parent;
  int time = 0;
  double branch_prob = 1.0;
  double density = 1.0;
};

// Finite filtered probability space. The filtration is the tree itself: a
// time-t measurable quantity is one value per time-t node. The pricing
// measure Q is carried by the density process D, so the Q-branch probability
// of a child is p_child * D_child / D_parent.
//
// Node ids are assigned in breadth-first order: the root is 0 and every
// time layer occupies a contiguous id range. Immutable after construction.
class ScenarioTree {
 public:
  // Builds the tree from unordered records. Throws StructuralError on a
  // missing/duplicate root, unknown parent, cycle, inconsistent times, or a
  // leaf strictly before the horizon. Probability/martingale checks are left
  // to validate_tree().
  static ScenarioTree from_specs(const std::vector<NodeSpec>& specs);

  int horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  NodeId root() const noexcept { return 0; }

  const Node& node(NodeId id) const { return nodes_.at(id); }
  int time(NodeId id) const { return nodes_[id].time; }
  std::span<const NodeId> children(NodeId id) const { return nodes_[id].children; }
  std::span<const NodeId> layer(int t) const;
  bool is_leaf(NodeId id) const { return nodes_[id].children.empty(); }
  std::optional<NodeId> find(const std::string& label) const;

  // Branch probability of reaching `child` from its parent under `m`.
  double branch_prob(NodeId child, Measure m) const;

  // Conditional probability of reaching `descendant` from `ancestor`.
  double path_prob(NodeId ancestor, NodeId descendant, Measure m) const;

  // Nodes of the subtree rooted at `id` at absolute time `t` (>= time(id)),
  // in id order.
  std::vector<NodeId> descendants_at(NodeId id, int t) const;

  // Ancestors of `id` from its time-`from` ancestor down to `id` inclusive.
  std::vector<NodeId> path_from(int from, NodeId id) const;

  // The time-`t` ancestor of `id` (t <= time(id)).
  NodeId ancestor_at(NodeId id, int t) const;

  bool is_descendant(NodeId ancestor, NodeId id) const;

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> ids_;               // 0..size-1, backing layer() spans
  std::vector<std::size_t> layer_begin_;  // size horizon_+2
  int horizon_ = 0;
};

struct TreeViolation {
  std::string node;
  std::string kind;  // "probability", "martingale", "density", "root"
  std::string message;
};

struct ValidationReport {
  std::vector<TreeViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::vector<std::string> messages() const;
};

ValidationReport validate_tree(const ScenarioTree& tree);

// Throws ValidationError carrying the report when validation fails.
void require_valid(const ScenarioTree& tree);

// E_t[Z] at `node` for a quantity Z defined on the time-u descendants.
// Q-expectations use E^Q_t[Z] = E^P_t[D_u Z] / D_t.
double conditional_expectation(const ScenarioTree& tree, NodeId node,
                               const NodeValues& values, int u, Measure m);

// Conditional expectation of a time-(t+1) quantity at every time-t node;
// entries outside time t are zero.
NodeValues one_step_expectation(const ScenarioTree& tree, const NodeValues& values,
                                int t, Measure m);

// E^Q_t[sum_{s>t} flow_s] at `node`.
double price_cashflow(const ScenarioTree& tree, const NodeValues& flows, NodeId node);

// price_cashflow at every node, computed leaf-to-root.
NodeValues price_cashflow_all(const ScenarioTree& tree, const NodeValues& flows);

}  // namespace liabval
