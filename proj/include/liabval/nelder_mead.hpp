#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace liabval {

struct NelderMeadOptions {
  double x_tol = 1e-9;   // simplex diameter (max-norm, about the best vertex)
  double f_tol = 1e-12;  // spread of objective values over the simplex
  int max_evaluations = 20000;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Downhill simplex with the standard coefficients (1, 2, 1/2, 1/2). After
// convergence the simplex is rebuilt once around the best point and the
// search resumed, which guards against a collapsed simplex.
template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const Eigen::MatrixXd& directions,
                             const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  NelderMeadResult out;
  if (n == 0) {
    out.x = x0;
    out.f = f(x0);
    out.evaluations = 1;
    out.converged = true;
    return out;
  }
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  Eigen::VectorXd start = x0;
  for (int round = 0; round < 2; ++round) {
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), start);
    std::vector<double> fv(pts.size());
    for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)] += opt.initial_step * directions.col(i);
    for (std::size_t i = 0; i < pts.size(); ++i) fv[i] = eval(pts[i]);
    std::vector<std::size_t> order(pts.size());
    bool done = false;
    while (evals < opt.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
      const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
      double diameter = 0.0;
      for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).lpNorm<Eigen::Infinity>());
      if (fv[worst] - fv[best] <= opt.f_tol && diameter <= opt.x_tol) {
        done = true;
        break;
      }
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t i : order) {
        if (i != worst) centroid += pts[i];
      }
      centroid /= static_cast<double>(n);
      Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
      double fr = eval(xr);
      if (fr < fv[best]) {
        Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
        double fe = eval(xe);
        if (fe < fr) {
          pts[worst] = xe;
          fv[worst] = fe;
        } else {
          pts[worst] = xr;
          fv[worst] = fr;
        }
        continue;
      }
      if (fr < fv[second]) {
        pts[worst] = xr;
        fv[worst] = fr;
        continue;
      }
      bool outside = fr < fv[worst];
      Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                   : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
      double fc = eval(xc);
      if (fc < (outside ? fr : fv[worst])) {
        pts[worst] = xc;
        fv[worst] = fc;
        continue;
      }
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == best) continue;
        pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
        fv[i] = eval(pts[i]);
      }
    }
    std::size_t best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    if (round == 0 || fv[best] < out.f) {
      out.x = pts[best];
      out.f = fv[best];
    }
    out.converged = done;
    if (!done) break;
    start = out.x;
  }
  out.evaluations = evals;
  return out;
}

template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
  return nelder_mead(std::forward<F>(f), x0, Eigen::MatrixXd::Identity(x0.size(), x0.size()), opt);
}

}  // namespace liabval
