#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "liabval/nelder_mead.hpp"

namespace liabval {

struct MinimizeOptions {
  int restarts = 8;            // quasi-random starts besides the seeds
  std::size_t probes = 1000;   // quasi-random certification probes
  double tie_tolerance = 1e-9;
  NelderMeadOptions simplex;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  // Distinct local minima (max-norm distance > 1e-6) whose value is within
  // tie_tolerance of f, including x itself. Size 1 when there is no tie.
  std::vector<Eigen::VectorXd> ties;
  bool converged = true;       // every simplex run met its tolerances
  bool probe_improved = false; // a probe beat the simplex result and was polished
  std::size_t probes_checked = 0;
  int evaluations = 0;
};

// Restarted simplex search from `seeds` plus quasi-random starts in the box
// center +- half_width, followed by probe certification: the returned value is
// no larger than the objective at every probe in a box around the result.
MinimizeResult robust_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                               const std::vector<Eigen::VectorXd>& seeds,
                               const Eigen::VectorXd& center, const Eigen::VectorXd& half_width,
                               const MinimizeOptions& options = {});

}  // namespace liabval
