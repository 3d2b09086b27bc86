#include "liabval/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "liabval/cashflows.hpp"
#include "liabval/errors.hpp"

namespace liabval {

namespace {

inline Eigen::Index ix(NodeId id) { return static_cast<Eigen::Index>(id); }

void check_node_vector(const ScenarioTree& tree, const NodeValues& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != tree.size()) {
    throw DataError(std::string(what) + " does not match the tree");
  }
}

}  // namespace

StoppingTime optimal_default_time(const ScenarioTree& tree, const ValuationResult& result,
                                  NodeId start) {
  StoppingTime tau{start, {}};
  const int t = tree.time(start);
  if (t >= tree.horizon()) return tau;
  for (NodeId leaf : tree.descendants_at(start, tree.horizon())) {
    int label = tree.horizon() + 1;
    for (NodeId n : tree.path_from(t + 1, leaf)) {
      if (result.defaulted[n]) {
        label = tree.time(n);
        break;
      }
    }
    tau.at_leaf.emplace(leaf, label);
  }
  return tau;
}

void check_adapted(const ScenarioTree& tree, const StoppingTime& tau) {
  const int t = tree.time(tau.start);
  const int horizon = tree.horizon();
  auto leaves = tree.descendants_at(tau.start, horizon);
  if (tau.at_leaf.size() != leaves.size()) {
    throw MeasurabilityError("stopping time does not cover the leaves below its start node");
  }
  for (NodeId leaf : leaves) {
    auto it = tau.at_leaf.find(leaf);
    if (it == tau.at_leaf.end()) {
      throw MeasurabilityError("stopping time has no label for leaf '" + tree.node(leaf).label + "'");
    }
    if (it->second < t + 1 || it->second > horizon + 1) {
      throw MeasurabilityError("stopping time label out of range at leaf '" +
                               tree.node(leaf).label + "'");
    }
  }
  // tau ^ (s+1) must be constant on the leaves below each time-s node.
  for (int s = t + 1; s <= horizon; ++s) {
    for (NodeId n : tree.descendants_at(tau.start, s)) {
      auto below = tree.descendants_at(n, horizon);
      int first = std::min(tau.at_leaf.at(below.front()), s + 1);
      for (NodeId leaf : below) {
        if (std::min(tau.at_leaf.at(leaf), s + 1) != first) {
          throw MeasurabilityError("stopping time is not adapted: the decision at node '" +
                                   tree.node(n).label + "' depends on later information");
        }
      }
    }
  }
}

double stopping_value(const ScenarioTree& tree, const NodeValues& requirement,
                      const NodeValues& residual, const StoppingTime& tau, Objective objective) {
  check_node_vector(tree, requirement, "requirement vector");
  check_node_vector(tree, residual, "residual flow vector");
  check_adapted(tree, tau);
  const int t = tree.time(tau.start);
  double acc = 0.0;
  for (auto [leaf, label] : tau.at_leaf) {
    double q = tree.path_prob(tau.start, leaf, Measure::Q);
    auto path = tree.path_from(t, leaf);  // path[k] is at time t + k
    double payoff = 0.0;
    for (int s = t + 1; s <= label - 1; ++s) {
      NodeId n = path[static_cast<std::size_t>(s - t)];
      NodeId prev = path[static_cast<std::size_t>(s - t - 1)];
      if (objective == Objective::owner) {
        payoff += requirement[ix(prev)] - requirement[ix(n)] - residual[ix(n)];
      } else {
        payoff += residual[ix(n)];
      }
    }
    if (objective == Objective::policyholder) {
      // R_{tau-1}; R_T = 0 on full runoff.
      if (label <= tree.horizon()) {
        payoff += requirement[ix(path[static_cast<std::size_t>(label - 1 - t)])];
      }
    }
    acc += q * payoff;
  }
  return acc;
}

namespace {

// Depth-first walk over all adapted rules. Decision nodes are listed in
// preorder; stopping at a node skips its whole subtree. "Continue" is tried
// before "stop", so among equal-valued rules the first one visited is the
// pointwise largest.
class RuleWalker {
 public:
  RuleWalker(const ScenarioTree& tree, NodeId start, const NodeValues& req, const NodeValues& x)
      : tree_(tree), start_(start) {
    collect(start);
    const std::size_t n = nodes_.size();
    owner_gain_.resize(n);
    holder_continue_.resize(n);
    holder_stop_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      NodeId node = nodes_[k];
      NodeId parent = *tree.node(node).parent;
      double q = tree.path_prob(start, node, Measure::Q);
      owner_gain_[k] = q * (req[ix(parent)] - req[ix(node)] - x[ix(node)]);
      holder_continue_[k] = q * x[ix(node)];
      holder_stop_[k] = q * req[ix(parent)];
    }
    stop_.assign(n, 0);
  }

  std::size_t decision_nodes() const { return nodes_.size(); }

  template <typename Visit>
  void walk(Visit&& visit) {
    recurse(0, 0.0, 0.0, visit);
  }

  StoppingTime current_rule() const {
    StoppingTime tau{start_, {}};
    const int horizon = tree_.horizon();
    for (NodeId leaf : tree_.descendants_at(start_, horizon)) {
      int label = horizon + 1;
      for (NodeId n : tree_.path_from(tree_.time(start_) + 1, leaf)) {
        if (stop_[slot_.at(n)]) {
          label = tree_.time(n);
          break;
        }
      }
      tau.at_leaf.emplace(leaf, label);
    }
    return tau;
  }

 private:
  void collect(NodeId node) {
    for (NodeId c : tree_.children(node)) {
      std::size_t k = nodes_.size();
      nodes_.push_back(c);
      skip_.push_back(0);
      slot_.emplace(c, k);
      collect(c);
      skip_[k] = nodes_.size();
    }
  }

  template <typename Visit>
  bool recurse(std::size_t i, double owner, double holder, Visit& visit) {
    if (i == nodes_.size()) return visit(owner, holder);
    stop_[i] = 0;
    if (!recurse(i + 1, owner + owner_gain_[i], holder + holder_continue_[i], visit)) return false;
    stop_[i] = 1;
    return recurse(skip_[i], owner, holder + holder_stop_[i], visit);
  }

  const ScenarioTree& tree_;
  NodeId start_;
  std::vector<NodeId> nodes_;
  std::vector<std::size_t> skip_;
  std::map<NodeId, std::size_t> slot_;
  std::vector<double> owner_gain_, holder_continue_, holder_stop_;
  std::vector<char> stop_;
};

}  // namespace

StoppingEnumeration enumerate_optimal_stopping(const ScenarioTree& tree, NodeId start,
                                               const NodeValues& requirement,
                                               const NodeValues& residual, std::size_t guard) {
  check_node_vector(tree, requirement, "requirement vector");
  check_node_vector(tree, residual, "residual flow vector");
  StoppingEnumeration out;
  if (tree.time(start) >= tree.horizon()) {
    out.owner_argmax = out.policyholder_argmin = StoppingTime{start, {}};
    out.rules = 1;
    return out;
  }
  RuleWalker walker(tree, start, requirement, residual);
  out.decision_nodes = walker.decision_nodes();
  if (out.decision_nodes > guard) {
    throw GuardError("subtree has " + std::to_string(out.decision_nodes) +
                     " decision nodes, above the enumeration guard of " + std::to_string(guard) +
                     "; use backward_valuation instead");
  }

  double best_owner = -std::numeric_limits<double>::infinity();
  double best_holder = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  walker.walk([&](double owner, double holder) {
    ++count;
    best_owner = std::max(best_owner, owner);
    best_holder = std::min(best_holder, holder);
    return true;
  });
  out.rules = count;
  out.owner_sup = best_owner;
  out.policyholder_inf = best_holder;

  // Second pass: the first rule within rounding of the optimum.
  const double owner_tol = 1e-12 * (1.0 + std::abs(best_owner));
  const double holder_tol = 1e-12 * (1.0 + std::abs(best_holder));
  bool have_owner = false, have_holder = false;
  walker.walk([&](double owner, double holder) {
    if (!have_owner && owner >= best_owner - owner_tol) {
      out.owner_argmax = walker.current_rule();
      have_owner = true;
    }
    if (!have_holder && holder <= best_holder + holder_tol) {
      out.policyholder_argmin = walker.current_rule();
      have_holder = true;
    }
    return !(have_owner && have_holder);
  });
  return out;
}

}  // namespace liabval
