#include "liabval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "liabval/errors.hpp"

namespace liabval {

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (double& x : w) sum += (x = unif(rng));
  for (double& x : w) x /= sum;
  return w;
}

// Branching counts layer by layer; redrawn until the node budget holds.
std::vector<std::vector<int>> draw_shape(std::mt19937_64& rng, int horizon, int max_branching,
                                         std::size_t budget) {
  std::uniform_int_distribution<int> branch(1, max_branching);
  while (true) {
    std::vector<std::vector<int>> shape;
    std::size_t width = 1, total = 0;
    bool ok = true;
    for (int t = 0; t < horizon && ok; ++t) {
      std::vector<int> counts(width);
      std::size_t next = 0;
      for (int& c : counts) next += static_cast<std::size_t>(c = branch(rng));
      total += next;
      ok = total <= budget;
      shape.push_back(std::move(counts));
      width = next;
    }
    if (ok) return shape;
  }
}

}  // namespace

SyntheticCase random_case(std::mt19937_64& rng, const RandomTreeOptions& options) {
  if (options.min_horizon < 1 || options.max_horizon < options.min_horizon ||
      options.max_branching < 1 || options.instruments < 0) {
    throw ArgumentError("random_case: invalid options");
  }
  if (static_cast<std::size_t>(options.max_horizon) > options.max_decision_nodes) {
    throw ArgumentError("random_case: node budget below the horizon");
  }
  std::uniform_int_distribution<int> horizon_dist(options.min_horizon, options.max_horizon);
  const int horizon = horizon_dist(rng);
  auto shape = draw_shape(rng, horizon, options.max_branching, options.max_decision_nodes);

  std::vector<NodeSpec> specs{{"n0", std::nullopt, 0, 1.0, 1.0}};
  std::vector<std::size_t> layer{0};
  for (int t = 0; t < horizon; ++t) {
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < layer.size(); ++k) {
      const int count = shape[static_cast<std::size_t>(t)][k];
      auto p = random_simplex(rng, count);
      auto q = options.random_density ? random_simplex(rng, count) : p;
      const std::string parent = specs[layer[k]].label;
      const double parent_density = specs[layer[k]].density;
      for (int j = 0; j < count; ++j) {
        auto ju = static_cast<std::size_t>(j);
        next.push_back(specs.size());
        specs.push_back({"n" + std::to_string(specs.size()), parent, t + 1, p[ju],
                         parent_density * q[ju] / p[ju]});
      }
    }
    layer = std::move(next);
  }

  SyntheticCase out{ScenarioTree::from_specs(specs), {}};
  const auto n = static_cast<Eigen::Index>(out.tree.size());
  std::normal_distribution<double> flow(0.5, 1.0);
  auto draw = [&] {
    double x = flow(rng);
    if (options.flow_step > 0.0) x = options.flow_step * std::round(x / options.flow_step);
    return x;
  };
  out.flows.liability = NodeValues::Zero(n);
  out.flows.instruments = Eigen::MatrixXd::Zero(n, options.instruments);
  // Specs were created breadth-first, so tree ids coincide with spec order.
  for (Eigen::Index i = 1; i < n; ++i) {
    out.flows.liability[i] = draw();
    for (int j = 0; j < options.instruments; ++j) out.flows.instruments(i, j) = draw();
  }
  return out;
}

SyntheticCase product_case(const std::vector<PeriodLaw>& periods) {
  if (periods.empty()) throw ArgumentError("product_case: no periods");
  std::vector<NodeSpec> specs{{"n0", std::nullopt, 0, 1.0, 1.0}};
  std::vector<double> flows{0.0};
  std::vector<std::size_t> layer{0};
  for (std::size_t s = 0; s < periods.size(); ++s) {
    const PeriodLaw& law = periods[s];
    if (law.values.empty() || law.p.size() != law.values.size() ||
        law.q.size() != law.values.size()) {
      throw DataError("period " + std::to_string(s + 1) + ": atom and weight lists differ in length");
    }
    std::vector<std::size_t> next;
    for (std::size_t parent : layer) {
      for (std::size_t k = 0; k < law.values.size(); ++k) {
        next.push_back(specs.size());
        specs.push_back({"n" + std::to_string(specs.size()), specs[parent].label,
                         static_cast<int>(s + 1), law.p[k],
                         specs[parent].density * law.q[k] / law.p[k]});
        flows.push_back(law.values[k]);
      }
    }
    layer = std::move(next);
  }
  SyntheticCase out{ScenarioTree::from_specs(specs), {}};
  out.flows.liability = Eigen::Map<const NodeValues>(flows.data(), static_cast<Eigen::Index>(flows.size()));
  out.flows.instruments = Eigen::MatrixXd::Zero(out.flows.liability.size(), 0);
  return out;
}

}  // namespace liabval

namespace liabval {

GaussianModel<double> random_gaussian_model(std::mt19937_64& rng, const RandomModelOptions& options) {
  const int min_dim = std::max(1, options.instruments + 1);
  if (min_dim > options.max_dimension) {
    throw ArgumentError("random_gaussian_model: too many instruments for the dimension");
  }
  std::uniform_int_distribution<int> dim(min_dim, options.max_dimension), hor(1, options.max_horizon);
  const int n = dim(rng);
  const int T = hor(rng);
  int m = options.instruments;
  if (m < 0) m = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::normal_distribution<double> z;
  std::vector<Eigen::VectorXd> a, lambda;
  std::vector<GaussianModel<double>::Loading> loadings;
  for (int t = 1; t <= T; ++t) {
    Eigen::VectorXd at(n), lt(n);
    for (int i = 0; i < n; ++i) {
      at[i] = z(rng);
      lt[i] = options.girsanov_scale * z(rng);
    }
    a.push_back(at);
    lambda.push_back(lt);
    for (int s = 1; s <= t; ++s) {
      if (options.block_diagonal && s < t) continue;
      Eigen::MatrixXd b(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) b(i, j) = (s == t ? 0.5 : 0.3) * z(rng);
      }
      if (s == t) {
        // Diagonally dominant, hence nonsingular.
        for (int i = 0; i < n; ++i) b(i, i) = (z(rng) < 0 ? -1.0 : 1.0) * (b.row(i).cwiseAbs().sum() + 0.5);
      }
      loadings.push_back({t, s, b});
    }
  }
  return GaussianModel<double>(n, T, m, a, loadings, lambda);
}

}  // namespace liabval
