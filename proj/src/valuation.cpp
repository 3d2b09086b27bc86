#include "liabval/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liabval/cashflows.hpp"
#include "liabval/errors.hpp"
#include "liabval/normal.hpp"
#include "liabval/parallel.hpp"

namespace liabval {

namespace {

inline Eigen::Index ix(NodeId id) { return static_cast<Eigen::Index>(id); }

}  // namespace

ValuationResult backward_valuation(const ScenarioTree& tree, const NodeValues& residual,
                                   const RiskMeasureSpec& spec) {
  check_flow(tree, residual);
  const auto n = ix(tree.size());
  ValuationResult res;
  res.v = NodeValues::Zero(n);
  res.c = NodeValues::Zero(n);
  res.r = NodeValues::Zero(n);
  res.defaulted.assign(tree.size(), false);

  // Y_{t+1} = X_{t+1} + V_{t+1}, filled layer by layer.
  NodeValues y = NodeValues::Zero(n);
  for (int t = tree.horizon() - 1; t >= 0; --t) {
    for (NodeId c : tree.layer(t + 1)) y[ix(c)] = residual[ix(c)] + res.v[ix(c)];
    auto layer = tree.layer(t);
    parallel_for(layer.size(), [&](std::size_t k) {
      NodeId node = layer[k];
      double req = rho(tree, node, y, spec);
      double owner = 0.0;
      for (NodeId c : tree.children(node)) {
        double surplus = req - y[ix(c)];
        if (surplus > 0.0) owner += tree.branch_prob(c, Measure::Q) * surplus;
      }
      res.r[ix(node)] = req;
      res.c[ix(node)] = owner;
      res.v[ix(node)] = req - owner;
    });
    for (NodeId node : layer) {
      for (NodeId c : tree.children(node)) {
        res.defaulted[c] = res.r[ix(node)] - y[ix(c)] < 0.0;
      }
    }
  }
  return res;
}

NodeValues gamma_step(const ScenarioTree& tree, const NodeValues& y, int t,
                      const RiskMeasureSpec& spec) {
  NodeValues out = NodeValues::Zero(ix(tree.size()));
  for (NodeId node : tree.layer(t)) {
    double req = rho(tree, node, y, spec);
    double acc = 0.0;
    for (NodeId c : tree.children(node)) {
      acc += tree.branch_prob(c, Measure::Q) * std::max(0.0, req - y[ix(c)]);
    }
    out[ix(node)] = acc;
  }
  return out;
}

NodeValues phi_step(const ScenarioTree& tree, const NodeValues& y, int t,
                    const RiskMeasureSpec& spec) {
  NodeValues g = gamma_step(tree, y, t, spec);
  NodeValues out = NodeValues::Zero(ix(tree.size()));
  for (NodeId node : tree.layer(t)) out[ix(node)] = rho(tree, node, y, spec) - g[ix(node)];
  return out;
}

NodeValues compose_phi(const ScenarioTree& tree, const NodeValues& leaf_values, int t,
                       const RiskMeasureSpec& spec) {
  if (t < 0 || t > tree.horizon()) throw ArgumentError("compose_phi: time out of range");
  NodeValues cur = leaf_values;
  for (int s = tree.horizon() - 1; s >= t; --s) cur = phi_step(tree, cur, s, spec);
  return cur;
}

NodeValues liability_value(const ScenarioTree& tree, const NodeValues& liability,
                           const NodeValues& replication, const ValuationResult& result) {
  check_flow(tree, liability);
  check_flow(tree, replication);
  if (result.v.size() != liability.size()) {
    throw DataError("valuation result does not match the tree");
  }
  return price_cashflow_all(tree, replication) + result.v;
}

NodeValues cost_of_capital_rates(const ScenarioTree& tree, const ValuationResult& result,
                                 const NodeValues& residual) {
  check_flow(tree, residual);
  NodeValues eta = NodeValues::Constant(ix(tree.size()), std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < tree.horizon(); ++t) {
    for (NodeId node : tree.layer(t)) {
      double ep = 0.0, eq = 0.0;
      for (NodeId c : tree.children(node)) {
        double surplus =
            std::max(0.0, result.r[ix(node)] - residual[ix(c)] - result.v[ix(c)]);
        ep += tree.branch_prob(c, Measure::P) * surplus;
        eq += tree.branch_prob(c, Measure::Q) * surplus;
      }
      if (eq > 0.0) eta[ix(node)] = ep / eq - 1.0;
    }
  }
  return eta;
}

namespace {

// V_t = sum_{s>t} (rho_0(-X_s) - E^Q[(rho_0(-X_s) - X_s)_+]) and friends from
// the per-period requirement and owner value.
DeterministicValuation accumulate(const std::vector<double>& requirement,
                                  const std::vector<double>& owner) {
  const std::size_t horizon = requirement.size();
  DeterministicValuation out;
  out.v.assign(horizon + 1, 0.0);
  out.c.assign(horizon + 1, 0.0);
  out.r.assign(horizon + 1, 0.0);
  for (std::size_t t = horizon; t-- > 0;) {
    // Period t+1 lives at index t.
    out.v[t] = out.v[t + 1] + requirement[t] - owner[t];
    out.c[t] = owner[t];
    out.r[t] = requirement[t] + out.v[t + 1];
  }
  return out;
}

}  // namespace

DeterministicValuation iid_closed_form(const std::vector<PeriodLaw>& periods,
                                       const RiskMeasureSpec& spec) {
  const std::size_t horizon = periods.size();
  if (horizon == 0) throw DataError("iid_closed_form: no periods");
  std::vector<double> requirement(horizon), owner(horizon);
  for (std::size_t s = 0; s < horizon; ++s) {
    const PeriodLaw& law = periods[s];
    if (law.values.empty() || law.p.size() != law.values.size() ||
        law.q.size() != law.values.size()) {
      throw DataError("period " + std::to_string(s + 1) +
                      ": atom and weight lists differ in length");
    }
    double ps = 0.0, qs = 0.0;
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      if (!(law.p[k] > 0.0) || !(law.q[k] > 0.0)) {
        throw DataError("period " + std::to_string(s + 1) + ": weights must be positive");
      }
      ps += law.p[k];
      qs += law.q[k];
    }
    if (std::abs(ps - 1.0) > kProbabilityTolerance || std::abs(qs - 1.0) > kProbabilityTolerance) {
      throw DataError("period " + std::to_string(s + 1) + ": weights must sum to 1");
    }
    double req = rho_of_law({law.values, law.p}, spec);
    double acc = 0.0;
    for (std::size_t k = 0; k < law.values.size(); ++k) {
      acc += law.q[k] * std::max(0.0, req - law.values[k]);
    }
    requirement[s] = req;
    owner[s] = acc;
  }
  return accumulate(requirement, owner);
}

DeterministicValuation iid_closed_form(const std::vector<NormalPeriodLaw>& periods,
                                       const RiskMeasureSpec& spec) {
  const std::size_t horizon = periods.size();
  if (horizon == 0) throw DataError("iid_closed_form: no periods");
  const double z = r0(spec);
  std::vector<double> requirement(horizon), owner(horizon);
  for (std::size_t s = 0; s < horizon; ++s) {
    const NormalPeriodLaw& law = periods[s];
    if (!(law.sd >= 0.0) || !std::isfinite(law.mean_p) || !std::isfinite(law.mean_q)) {
      throw DataError("period " + std::to_string(s + 1) + ": invalid normal law");
    }
    requirement[s] = law.mean_p + law.sd * z;
    // Under Q the liability is mean_q + sd e; (requirement - X)_+ has mean
    // E[(a - sd e)_+] with a = requirement - mean_q.
    double a = requirement[s] - law.mean_q;
    if (law.sd == 0.0) {
      owner[s] = std::max(a, 0.0);
    } else {
      double k = a / law.sd;
      owner[s] = a * norm_cdf(k) + law.sd * norm_pdf(k);
    }
  }
  return accumulate(requirement, owner);
}

}  // namespace liabval
