#include "liabval/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "liabval/errors.hpp"

namespace liabval {

ScenarioTree ScenarioTree::from_specs(const std::vector<NodeSpec>& specs) {
  if (specs.empty()) throw StructuralError("tree has no nodes");

  std::unordered_map<std::string, std::size_t> by_label;
  std::optional<std::size_t> root_spec;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!by_label.emplace(specs[i].label, i).second) {
      throw StructuralError("duplicate node id '" + specs[i].label + "'");
    }
    if (!specs[i].parent) {
      if (root_spec) throw StructuralError("more than one root node");
      root_spec = i;
    }
  }
  if (!root_spec) throw StructuralError("no root node (every node has a parent)");

  std::vector<std::vector<std::size_t>> kids(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!specs[i].parent) continue;
    auto it = by_label.find(*specs[i].parent);
    if (it == by_label.end()) {
      throw StructuralError("orphan node '" + specs[i].label + "': unknown parent '" +
                            *specs[i].parent + "'");
    }
    kids[it->second].push_back(i);
  }

  // Breadth-first relabelling; anything unreachable from the root sits on a
  // cycle (every node has exactly one parent).
  ScenarioTree tree;
  std::vector<std::size_t> order{*root_spec};
  std::vector<NodeId> new_id(specs.size(), static_cast<NodeId>(-1));
  new_id[*root_spec] = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t c : kids[order[k]]) {
      new_id[c] = order.size();
      order.push_back(c);
    }
  }
  if (order.size() != specs.size()) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (new_id[i] == static_cast<NodeId>(-1)) {
        throw StructuralError("node '" + specs[i].label +
                              "' is not reachable from the root (cycle)");
      }
    }
  }

  const auto& root = specs[*root_spec];
  if (root.time != 0) throw StructuralError("root node must have time 0");

  tree.nodes_.resize(specs.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const NodeSpec& s = specs[order[k]];
    Node& n = tree.nodes_[k];
    n.label = s.label;
    n.time = s.time;
    n.branch_prob = s.parent ? s.branch_prob : 1.0;
    n.density = s.density;
    if (s.parent) {
      NodeId p = new_id[by_label.at(*s.parent)];
      n.parent = p;
      tree.nodes_[p].children.push_back(k);
      if (tree.nodes_[p].time + 1 != n.time) {
        throw StructuralError("node '" + s.label + "' has time " + std::to_string(n.time) +
                              " but its parent has time " +
                              std::to_string(tree.nodes_[p].time));
      }
    }
    tree.horizon_ = std::max(tree.horizon_, n.time);
  }
  if (tree.horizon_ < 1) throw StructuralError("tree must span at least one period");
  for (const Node& n : tree.nodes_) {
    if (n.children.empty() && n.time != tree.horizon_) {
      throw StructuralError("leaf '" + n.label + "' at time " + std::to_string(n.time) +
                            " precedes the horizon " + std::to_string(tree.horizon_));
    }
  }

  tree.ids_.resize(tree.nodes_.size());
  for (std::size_t k = 0; k < tree.ids_.size(); ++k) tree.ids_[k] = k;
  tree.layer_begin_.assign(tree.horizon_ + 2, 0);
  for (std::size_t k = 0; k < tree.nodes_.size(); ++k) {
    tree.layer_begin_[tree.nodes_[k].time + 1] = k + 1;
  }
  return tree;
}

std::span<const NodeId> ScenarioTree::layer(int t) const {
  if (t < 0 || t > horizon_) throw ArgumentError("time layer out of range");
  return std::span<const NodeId>(ids_).subspan(layer_begin_[t],
                                               layer_begin_[t + 1] - layer_begin_[t]);
}

std::optional<NodeId> ScenarioTree::find(const std::string& label) const {
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].label == label) return i;
  }
  return std::nullopt;
}

double ScenarioTree::branch_prob(NodeId child, Measure m) const {
  const Node& n = nodes_.at(child);
  if (!n.parent) return 1.0;
  if (m == Measure::P) return n.branch_prob;
  return n.branch_prob * n.density / nodes_[*n.parent].density;
}

double ScenarioTree::path_prob(NodeId ancestor, NodeId descendant, Measure m) const {
  double p = 1.0;
  NodeId cur = descendant;
  while (cur != ancestor) {
    const Node& n = nodes_.at(cur);
    if (!n.parent || n.time <= nodes_.at(ancestor).time) {
      throw ArgumentError("path_prob: node is not a descendant");
    }
    p *= n.branch_prob;
    cur = *n.parent;
  }
  if (m == Measure::Q) p *= nodes_[descendant].density / nodes_[ancestor].density;
  return p;
}

std::vector<NodeId> ScenarioTree::descendants_at(NodeId id, int t) const {
  if (t < nodes_.at(id).time || t > horizon_) {
    throw ArgumentError("descendants_at: time outside the subtree");
  }
  std::vector<NodeId> frontier{id};
  for (int s = nodes_[id].time; s < t; ++s) {
    std::vector<NodeId> next;
    for (NodeId n : frontier) {
      next.insert(next.end(), nodes_[n].children.begin(), nodes_[n].children.end());
    }
    frontier = std::move(next);
  }
  return frontier;
}

std::vector<NodeId> ScenarioTree::path_from(int from, NodeId id) const {
  std::vector<NodeId> path;
  NodeId cur = id;
  while (true) {
    path.push_back(cur);
    if (nodes_.at(cur).time <= from || !nodes_[cur].parent) break;
    cur = *nodes_[cur].parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

NodeId ScenarioTree::ancestor_at(NodeId id, int t) const {
  NodeId cur = id;
  while (nodes_.at(cur).time > t) cur = *nodes_[cur].parent;
  return cur;
}

bool ScenarioTree::is_descendant(NodeId ancestor, NodeId id) const {
  if (nodes_.at(id).time < nodes_.at(ancestor).time) return false;
  return ancestor_at(id, nodes_[ancestor].time) == ancestor;
}

std::vector<std::string> ValidationReport::messages() const {
  std::vector<std::string> out;
  out.reserve(violations.size());
  for (const auto& v : violations) out.push_back(v.kind + " at node '" + v.node + "': " + v.message);
  return out;
}

ValidationReport validate_tree(const ScenarioTree& tree) {
  ValidationReport report;
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  const Node& root = tree.node(tree.root());
  if (std::abs(root.density - 1.0) > kProbabilityTolerance) {
    report.violations.push_back({root.label, "root", "D_0 = " + fmt(root.density) + " != 1"});
  }
  for (NodeId id = 0; id < tree.size(); ++id) {
    const Node& n = tree.node(id);
    if (!(n.density > 0.0) || !std::isfinite(n.density)) {
      report.violations.push_back({n.label, "density", "density " + fmt(n.density) + " is not positive"});
    }
    if (n.parent && !(n.branch_prob > 0.0)) {
      report.violations.push_back(
          {n.label, "probability", "branch probability " + fmt(n.branch_prob) + " is not positive"});
    }
    if (n.children.empty()) continue;
    double psum = 0.0, dsum = 0.0;
    for (NodeId c : n.children) {
      psum += tree.node(c).branch_prob;
      dsum += tree.node(c).branch_prob * tree.node(c).density;
    }
    if (std::abs(psum - 1.0) > kProbabilityTolerance) {
      report.violations.push_back(
          {n.label, "probability", "child probabilities sum to " + fmt(psum)});
    }
    if (std::abs(dsum - n.density) > kProbabilityTolerance) {
      report.violations.push_back({n.label, "martingale",
                                   "E^P[D | node] = " + fmt(dsum) + " but D = " + fmt(n.density)});
    }
  }
  return report;
}

void require_valid(const ScenarioTree& tree) {
  auto report = validate_tree(tree);
  if (!report.ok()) throw ValidationError("scenario tree failed validation", report.messages());
}

namespace {

void check_values(const ScenarioTree& tree, const NodeValues& values) {
  if (static_cast<std::size_t>(values.size()) != tree.size()) {
    throw DataError("value vector has " + std::to_string(values.size()) +
                    " entries for a tree of " + std::to_string(tree.size()) + " nodes");
  }
}

}  // namespace

double conditional_expectation(const ScenarioTree& tree, NodeId node,
                               const NodeValues& values, int u, Measure m) {
  check_values(tree, values);
  if (u <= tree.time(node)) {
    throw ArgumentError("conditional_expectation: target time must exceed the node time");
  }
  if (u > tree.horizon()) throw ArgumentError("conditional_expectation: time beyond horizon");
  double acc = 0.0;
  for (NodeId d : tree.descendants_at(node, u)) {
    double z = values[static_cast<Eigen::Index>(d)];
    if (std::isnan(z)) {
      throw DataError("missing value at node '" + tree.node(d).label + "'");
    }
    acc += tree.path_prob(node, d, Measure::P) *
           (m == Measure::Q ? tree.node(d).density : 1.0) * z;
  }
  return m == Measure::Q ? acc / tree.node(node).density : acc;
}

NodeValues one_step_expectation(const ScenarioTree& tree, const NodeValues& values, int t,
                                Measure m) {
  check_values(tree, values);
  NodeValues out = NodeValues::Zero(static_cast<Eigen::Index>(tree.size()));
  for (NodeId n : tree.layer(t)) {
    double acc = 0.0;
    for (NodeId c : tree.children(n)) acc += tree.branch_prob(c, m) * values[static_cast<Eigen::Index>(c)];
    out[static_cast<Eigen::Index>(n)] = acc;
  }
  return out;
}

NodeValues price_cashflow_all(const ScenarioTree& tree, const NodeValues& flows) {
  check_values(tree, flows);
  NodeValues price = NodeValues::Zero(static_cast<Eigen::Index>(tree.size()));
  for (int t = tree.horizon() - 1; t >= 0; --t) {
    for (NodeId n : tree.layer(t)) {
      double acc = 0.0;
      for (NodeId c : tree.children(n)) {
        auto ci = static_cast<Eigen::Index>(c);
        if (std::isnan(flows[ci])) {
          throw DataError("missing flow at node '" + tree.node(c).label + "'");
        }
        acc += tree.branch_prob(c, Measure::Q) * (flows[ci] + price[ci]);
      }
      price[static_cast<Eigen::Index>(n)] = acc;
    }
  }
  return price;
}

double price_cashflow(const ScenarioTree& tree, const NodeValues& flows, NodeId node) {
  return price_cashflow_all(tree, flows)[static_cast<Eigen::Index>(node)];
}

}  // namespace liabval
