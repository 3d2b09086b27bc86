#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "liabval/errors.hpp"
#include "liabval/scenario_tree.hpp"
#include "liabval/synthetic.hpp"

using namespace liabval;
using liabval::testing::node_values;
using liabval::testing::two_leaf_tree;
using Catch::Matchers::WithinAbs;

TEST_CASE("tree construction rejects malformed input", "[tree]") {
  using S = std::vector<NodeSpec>;
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{}), StructuralError);
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1}, {"a", "a", 1, 1, 1}}),
                  StructuralError);
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1}, {"b", std::nullopt, 0, 1, 1}}),
                  StructuralError);
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1}, {"b", "zz", 1, 1, 1}}),
                  StructuralError);
  // b <-> c form a cycle detached from the root
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1},
                                             {"x", "a", 1, 1, 1},
                                             {"b", "c", 1, 1, 1},
                                             {"c", "b", 2, 1, 1}}),
                  StructuralError);
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1}, {"b", "a", 2, 1, 1}}),
                  StructuralError);
  // leaf before the horizon
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1},
                                             {"b", "a", 1, 0.5, 1},
                                             {"c", "a", 1, 0.5, 1},
                                             {"d", "b", 2, 1, 1}}),
                  StructuralError);
  CHECK_THROWS_AS(ScenarioTree::from_specs(S{{"a", std::nullopt, 0, 1, 1}}), StructuralError);
}

TEST_CASE("ids are breadth first regardless of input order", "[tree]") {
  auto tree = ScenarioTree::from_specs({{"d", "b", 2, 1, 1},
                                        {"c", "a", 1, 0.5, 1},
                                        {"a", std::nullopt, 0, 1, 1},
                                        {"e", "c", 2, 1, 1},
                                        {"b", "a", 1, 0.5, 1}});
  CHECK(tree.node(0).label == "a");
  CHECK(tree.layer(1).size() == 2);
  CHECK(tree.layer(2).size() == 2);
  for (NodeId id : tree.layer(2)) CHECK(tree.time(id) == 2);
  CHECK(tree.find("e").has_value());
  CHECK_FALSE(tree.find("zz").has_value());
}

TEST_CASE("validate_tree examples", "[tree]") {
  CHECK(validate_tree(two_leaf_tree(0.5, 1.2, 0.8)).ok());
  CHECK(validate_tree(two_leaf_tree(0.5, 1.0, 1.0)).ok());
  auto report = validate_tree(two_leaf_tree(0.5, 1.5, 0.6));
  REQUIRE_FALSE(report.ok());
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == "martingale");
  CHECK(report.violations[0].node == "root");
  CHECK_THROWS_AS(require_valid(two_leaf_tree(0.5, 1.5, 0.6)), ValidationError);

  auto bad_p = ScenarioTree::from_specs({{"r", std::nullopt, 0, 1, 1},
                                         {"a", "r", 1, 0.5, 1},
                                         {"b", "r", 1, 0.6, 1}});
  CHECK(validate_tree(bad_p).violations.at(0).kind == "probability");
  auto bad_d = ScenarioTree::from_specs({{"r", std::nullopt, 0, 1, 1},
                                         {"a", "r", 1, 0.5, 2.5},
                                         {"b", "r", 1, 0.5, -0.5}});
  bool density_flagged = false;
  for (const auto& v : validate_tree(bad_d).violations) density_flagged |= v.kind == "density";
  CHECK(density_flagged);
}

TEST_CASE("conditional expectation examples", "[tree]") {
  auto tree = two_leaf_tree(0.5, 1.2, 0.8);
  NodeValues z = node_values({0, 10, 20});
  CHECK_THAT(conditional_expectation(tree, 0, z, 1, Measure::Q), WithinAbs(14.0, 1e-12));
  CHECK_THAT(conditional_expectation(tree, 0, z, 1, Measure::P), WithinAbs(15.0, 1e-12));
  CHECK_THAT(price_cashflow(tree, z, 0), WithinAbs(14.0, 1e-12));
  CHECK_THROWS_AS(conditional_expectation(tree, 1, z, 1, Measure::P), ArgumentError);
  NodeValues missing = node_values({0, 10, std::nan("")});
  CHECK_THROWS_AS(conditional_expectation(tree, 0, missing, 1, Measure::P), DataError);
  CHECK_THROWS_AS(conditional_expectation(tree, 0, node_values({0, 1}), 1, Measure::P), DataError);
}

TEST_CASE("Q via density equals reweighted branch probabilities; tower property", "[tree]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    auto c = random_case(rng);
    const auto& tree = c.tree;
    NodeValues values(static_cast<Eigen::Index>(tree.size()));
    for (auto& v : values) v = z(rng);
    const int T = tree.horizon();
    // Q-expectation from the root via D versus products of Q-branch weights.
    double via_density = conditional_expectation(tree, 0, values, T, Measure::Q);
    double via_branches = 0.0;
    for (NodeId leaf : tree.layer(T)) {
      double w = 1.0;
      for (NodeId n = leaf; n != 0; n = *tree.node(n).parent) w *= tree.branch_prob(n, Measure::Q);
      via_branches += w * values[static_cast<Eigen::Index>(leaf)];
    }
    CHECK_THAT(via_density, WithinAbs(via_branches, 1e-12));

    for (int t = 1; t < T; ++t) {
      NodeValues inner = NodeValues::Zero(values.size());
      for (NodeId n : tree.layer(t)) {
        inner[static_cast<Eigen::Index>(n)] = conditional_expectation(tree, n, values, T, Measure::Q);
      }
      CHECK_THAT(conditional_expectation(tree, 0, inner, t, Measure::Q),
                 WithinAbs(via_density, 1e-12));
    }
  }
}

TEST_CASE("price_cashflow: deterministic flows, linearity", "[tree]") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    auto c = random_case(rng);
    const auto& tree = c.tree;
    NodeValues det = NodeValues::Zero(static_cast<Eigen::Index>(tree.size()));
    double expected = 0.0;
    for (int t = 1; t <= tree.horizon(); ++t) {
      for (NodeId n : tree.layer(t)) det[static_cast<Eigen::Index>(n)] = 1.5 * t;
      expected += 1.5 * t;
    }
    CHECK_THAT(price_cashflow(tree, det, 0), WithinAbs(expected, 1e-12));
    NodeValues zero = NodeValues::Zero(det.size());
    CHECK(price_cashflow(tree, zero, 0) == 0.0);
    NodeValues x = c.flows.liability;
    double lhs = price_cashflow(tree, 2.0 * x - 3.0 * det, 0);
    double rhs = 2.0 * price_cashflow(tree, x, 0) - 3.0 * expected;
    CHECK_THAT(lhs, WithinAbs(rhs, 1e-12));
  }
}

TEST_CASE("price_cashflow is invariant under sibling order", "[tree]") {
  auto a = ScenarioTree::from_specs({{"r", std::nullopt, 0, 1, 1},
                                     {"x", "r", 1, 0.3, 1.5},
                                     {"y", "r", 1, 0.7, 1.0 / 0.7 * (1 - 0.45)}});
  auto b = ScenarioTree::from_specs({{"r", std::nullopt, 0, 1, 1},
                                     {"y", "r", 1, 0.7, 1.0 / 0.7 * (1 - 0.45)},
                                     {"x", "r", 1, 0.3, 1.5}});
  NodeValues fa = NodeValues::Zero(3), fb = NodeValues::Zero(3);
  fa[static_cast<Eigen::Index>(*a.find("x"))] = 4.0;
  fa[static_cast<Eigen::Index>(*a.find("y"))] = -1.0;
  fb[static_cast<Eigen::Index>(*b.find("x"))] = 4.0;
  fb[static_cast<Eigen::Index>(*b.find("y"))] = -1.0;
  CHECK_THAT(price_cashflow(a, fa, 0), WithinAbs(price_cashflow(b, fb, 0), 1e-15));
}
