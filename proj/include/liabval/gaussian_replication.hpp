#pragma once

#include <vector>

#include <Eigen/Dense>

#include "liabval/gaussian_model.hpp"
#include "liabval/optimize.hpp"
#include "liabval/risk_measure.hpp"

namespace liabval {

// sum_{t=1}^T E[(sigma_t(g) (r0 - e) - g^T S_t lambda_t)_+] with
// sigma_t(g)^2 = g^T S_t S_t^T g, for a static exposure g.
double replication_objective(const GaussianModel<double>& model, const Eigen::VectorXd& g, double r0);

struct GaussianReplication {
  Eigen::VectorXd g_hat;  // (1, -v_hat, 0, ..., 0)
  Eigen::VectorXd v_hat;  // instrument weights
  double objective = 0.0;
  double k_q0 = 0.0;
  double l0 = 0.0;                     // sum_t E^Q_0[X^o_t] + K^Q_0 at g_hat
  std::vector<Eigen::VectorXd> ties;   // tied weight vectors, v_hat first
  bool converged = true;
  std::size_t probes_checked = 0;
};

// Minimizes replication_objective over g with g_1 = 1 and g_k = 0 beyond the
// instruments. Throws ArgumentError without instruments and ModelError when the
// objective is not finite.
GaussianReplication optimal_replication_g(const GaussianModel<double>& model,
                                          const RiskMeasureSpec& spec,
                                          const MinimizeOptions& options = {});

}  // namespace liabval
