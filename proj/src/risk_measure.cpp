#include "liabval/risk_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "liabval/errors.hpp"
#include "liabval/normal.hpp"

namespace liabval {

namespace {

constexpr double kCumulativeSlack = 1e-15;

void check_level(double q, const char* what) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ArgumentError(std::string(what) + " must lie strictly inside (0,1)");
  }
}

struct Sorted {
  std::vector<double> values;
  std::vector<double> cumulative;  // last entry pinned to 1
};

Sorted sort_law(DiscreteLaw law) {
  if (law.values.empty()) throw StructuralError("risk measure applied to an empty distribution");
  if (law.values.size() != law.probs.size()) {
    throw DataError("distribution values and probabilities differ in length");
  }
  std::vector<std::size_t> idx(law.values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return law.values[a] < law.values[b]; });
  Sorted s;
  s.values.reserve(idx.size());
  s.cumulative.reserve(idx.size());
  double c = 0.0;
  for (std::size_t i : idx) {
    c += law.probs[i];
    s.values.push_back(law.values[i]);
    s.cumulative.push_back(c);
  }
  s.cumulative.back() = 1.0;
  return s;
}

double sorted_quantile(const Sorted& s, double q) {
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    if (s.cumulative[k] + kCumulativeSlack >= q) return s.values[k];
  }
  return s.values.back();
}

double sorted_integral(const Sorted& s, double a, double b) {
  double acc = 0.0, lo = 0.0;
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    double hi = s.cumulative[k];
    double len = std::min(b, hi) - std::max(a, lo);
    if (len > 0.0) acc += s.values[k] * len;
    lo = hi;
  }
  return acc;
}

double sorted_rho(const Sorted& s, const RiskMeasureSpec& spec) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PointMass>) {
          return sorted_quantile(s, m.level);
        } else if constexpr (std::is_same_v<M, UniformTail>) {
          return sorted_integral(s, 1.0 - m.u, 1.0) / m.u;
        } else {
          double acc = 0.0;
          for (auto [level, weight] : m.atoms) acc += weight * sorted_quantile(s, level);
          return acc;
        }
      },
      spec.mixture());
}

struct ChildLaw {
  std::vector<double> values;
  std::vector<double> probs;
};

ChildLaw child_law(const ScenarioTree& tree, NodeId node, const NodeValues& y) {
  if (static_cast<std::size_t>(y.size()) != tree.size()) {
    throw DataError("value vector does not match the tree");
  }
  auto kids = tree.children(node);
  if (kids.empty()) throw StructuralError("risk measure evaluated at a leaf node");
  ChildLaw law;
  law.values.reserve(kids.size());
  law.probs.reserve(kids.size());
  for (NodeId c : kids) {
    double v = y[static_cast<Eigen::Index>(c)];
    if (std::isnan(v)) throw DataError("missing value at node '" + tree.node(c).label + "'");
    law.values.push_back(v);
    law.probs.push_back(tree.branch_prob(c, Measure::P));
  }
  return law;
}

}  // namespace

RiskMeasureSpec::RiskMeasureSpec(Mixture m) : mixture_(std::move(m)) {
  std::visit(
      [](const auto& mm) {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, PointMass>) {
          check_level(mm.level, "VaR level");
        } else if constexpr (std::is_same_v<M, UniformTail>) {
          check_level(mm.u, "expected shortfall level");
        } else {
          if (mm.atoms.empty()) throw ArgumentError("mixture needs at least one atom");
          double total = 0.0;
          for (auto [level, weight] : mm.atoms) {
            check_level(level, "mixture level");
            if (!(weight > 0.0)) throw ArgumentError("mixture weights must be positive");
            total += weight;
          }
          if (std::abs(total - 1.0) > kProbabilityTolerance) {
            throw ArgumentError("mixture weights must sum to 1");
          }
        }
      },
      mixture_);
}

double quantile(DiscreteLaw law, double q) {
  check_level(q, "quantile level");
  return sorted_quantile(sort_law(law), q);
}

double quantile_integral(DiscreteLaw law, double a, double b) {
  if (!(a >= 0.0 && a <= b && b <= 1.0)) throw ArgumentError("integration bounds outside [0,1]");
  return sorted_integral(sort_law(law), a, b);
}

double rho_of_law(DiscreteLaw law, const RiskMeasureSpec& spec) {
  return sorted_rho(sort_law(law), spec);
}

double conditional_quantile(const ScenarioTree& tree, NodeId node, const NodeValues& values,
                            double q) {
  check_level(q, "quantile level");
  auto law = child_law(tree, node, values);
  return quantile({law.values, law.probs}, q);
}

double rho(const ScenarioTree& tree, NodeId node, const NodeValues& y,
           const RiskMeasureSpec& spec) {
  auto law = child_law(tree, node, y);
  return rho_of_law({law.values, law.probs}, spec);
}

double r0(const RiskMeasureSpec& spec) {
  return std::visit(
      [](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PointMass>) {
          return norm_quantile(m.level);
        } else if constexpr (std::is_same_v<M, UniformTail>) {
          // (1/u) int_{1-u}^1 Phi^{-1}(v) dv = phi(Phi^{-1}(1-u)) / u
          return norm_pdf(norm_quantile(1.0 - m.u)) / m.u;
        } else {
          double acc = 0.0;
          for (auto [level, weight] : m.atoms) acc += weight * norm_quantile(level);
          return acc;
        }
      },
      spec.mixture());
}

}  // namespace liabval
