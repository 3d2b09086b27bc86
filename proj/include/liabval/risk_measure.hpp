#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "liabval/scenario_tree.hpp"

namespace liabval {

// Mixing distribution M on (0,1) of a spectral risk measure
//   rho_t(Z) = int_0^1 F^{-1}_{t,-Z}(u) dM(u).
struct PointMass {
  double level;  // M({level}) = 1; VaR at u corresponds to level 1 - u
};
struct UniformTail {
  double u;  // density 1/u on (1-u, 1); expected shortfall at u
};
struct DiscreteMixture {
  std::vector<std::pair<double, double>> atoms;  // (level, weight)
};

class RiskMeasureSpec {
 public:
  using Mixture = std::variant<PointMass, UniformTail, DiscreteMixture>;

  explicit RiskMeasureSpec(Mixture m);

  static RiskMeasureSpec value_at_risk(double u) { return RiskMeasureSpec(PointMass{1.0 - u}); }
  static RiskMeasureSpec expected_shortfall(double u) { return RiskMeasureSpec(UniformTail{u}); }
  static RiskMeasureSpec mixture(std::vector<std::pair<double, double>> atoms) {
    return RiskMeasureSpec(DiscreteMixture{std::move(atoms)});
  }

  const Mixture& mixture() const noexcept { return mixture_; }

 private:
  Mixture mixture_;
};

// Discrete law: atoms with probabilities, in any order.
struct DiscreteLaw {
  std::span<const double> values;
  std::span<const double> probs;
};

// Left-continuous quantile min{m : F(m) >= q}.
double quantile(DiscreteLaw law, double q);

// int_a^b F^{-1}(v) dv, exact for the step quantile function; 0 <= a <= b <= 1.
double quantile_integral(DiscreteLaw law, double a, double b);

// rho(-Y) for Y distributed according to `law`: the M-weighted quantile
// of Y, i.e. the capital needed to cover the liability-side variable Y.
double rho_of_law(DiscreteLaw law, const RiskMeasureSpec& spec);

// Quantile of the P-conditional law of the children values at `node`.
double conditional_quantile(const ScenarioTree& tree, NodeId node, const NodeValues& values,
                            double q);

// rho_t(-Y) at `node` with Y given on the node's children.
double rho(const ScenarioTree& tree, NodeId node, const NodeValues& y,
           const RiskMeasureSpec& spec);

// r_0 = int Phi^{-1}(u) dM(u), the risk of a standard normal liability.
double r0(const RiskMeasureSpec& spec);

}  // namespace liabval
