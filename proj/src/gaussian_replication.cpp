#include "liabval/gaussian_replication.hpp"

#include <cmath>

#include "liabval/errors.hpp"

namespace liabval {

double replication_objective(const GaussianModel<double>& model, const Eigen::VectorXd& g, double r0) {
  if (g.size() != model.dimension()) throw ArgumentError("exposure vector has the wrong length");
  double acc = 0.0;
  for (int t = 1; t <= model.horizon(); ++t) {
    Eigen::VectorXd loading = model.cumulative_loading(t).transpose() * g;
    double sigma = loading.norm();
    acc += positive_part_gaussian(sigma * r0 - loading.dot(model.girsanov(t)), sigma);
  }
  return acc;
}

namespace {

Eigen::VectorXd exposure_for(const GaussianModel<double>& model, const Eigen::VectorXd& v) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(model.dimension());
  g[0] = 1.0;
  g.segment(1, v.size()) = -v;
  return g;
}

// Weights minimizing sum_t |S_t^T g|^2, the total residual variance.
Eigen::VectorXd variance_hedge(const GaussianModel<double>& model) {
  const int m = model.instruments();
  const int T = model.horizon();
  const int n = model.dimension();
  Eigen::MatrixXd design(T * n, m);
  Eigen::VectorXd target(T * n);
  for (int t = 1; t <= T; ++t) {
    Eigen::MatrixXd st = model.cumulative_loading(t).transpose();
    design.middleRows((t - 1) * n, n) = st.middleCols(1, m);
    target.segment((t - 1) * n, n) = st.col(0);
  }
  return design.completeOrthogonalDecomposition().solve(target);
}

}  // namespace

GaussianReplication optimal_replication_g(const GaussianModel<double>& model,
                                          const RiskMeasureSpec& spec,
                                          const MinimizeOptions& options) {
  const int m = model.instruments();
  if (m < 1) throw ArgumentError("optimal_replication_g needs at least one instrument");
  const double r = r0(spec);

  auto objective = [&](const Eigen::VectorXd& v) {
    return replication_objective(model, exposure_for(model, v), r);
  };
  if (!std::isfinite(objective(Eigen::VectorXd::Zero(m)))) {
    throw ModelError("replication objective is not finite");
  }

  Eigen::VectorXd hedge = variance_hedge(model);
  std::vector<Eigen::VectorXd> seeds{Eigen::VectorXd::Zero(m)};
  if (hedge.allFinite()) seeds.push_back(hedge);
  Eigen::VectorXd half = (2.0 * hedge.cwiseAbs()).cwiseMax(2.0);
  auto best = robust_minimize(objective, seeds, Eigen::VectorXd::Zero(m), half, options);
  if (!std::isfinite(best.f)) throw ModelError("replication objective is not finite at the optimum");

  GaussianReplication out;
  out.v_hat = best.x;
  out.g_hat = exposure_for(model, best.x);
  out.objective = best.f;
  out.ties = best.ties;
  out.converged = best.converged;
  out.probes_checked = best.probes_checked;

  auto val = gaussian_valuation(model, constant_exposure(model, out.g_hat), r);
  out.k_q0 = val.k_q[0];
  double market = 0.0;
  for (int t = 1; t <= model.horizon(); ++t) {
    market += model.drift(t)[0] + measure_shift(model, 0, t)[0];
  }
  out.l0 = market + out.k_q0;
  return out;
}

}  // namespace liabval
