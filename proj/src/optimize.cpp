#include "liabval/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "liabval/errors.hpp"
#include "liabval/parallel.hpp"
#include "liabval/quasi_random.hpp"

namespace liabval {

namespace {

void add_tie(std::vector<Eigen::VectorXd>& ties, const Eigen::VectorXd& x) {
  for (const auto& t : ties) {
    if ((t - x).lpNorm<Eigen::Infinity>() <= 1e-6) return;
  }
  ties.push_back(x);
}

}  // namespace

MinimizeResult robust_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                               const std::vector<Eigen::VectorXd>& seeds,
                               const Eigen::VectorXd& center, const Eigen::VectorXd& half_width,
                               const MinimizeOptions& options) {
  const Eigen::Index dim = center.size();
  if (half_width.size() != dim) throw ArgumentError("robust_minimize: box dimension mismatch");
  for (const auto& s : seeds) {
    if (s.size() != dim) throw ArgumentError("robust_minimize: seed dimension mismatch");
  }

  std::vector<Eigen::VectorXd> starts = seeds;
  for (int k = 0; k < options.restarts; ++k) {
    starts.push_back(halton_in_box(static_cast<std::size_t>(k + 1), center, half_width));
  }
  if (starts.empty()) starts.push_back(center);

  std::vector<NelderMeadResult> runs(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    NelderMeadOptions nm = options.simplex;
    // Vary the initial simplex size across restarts.
    nm.initial_step = options.simplex.initial_step * (1.0 + static_cast<double>(i % 3));
    runs[i] = nelder_mead(f, starts[i], nm);
  }, 1);

  MinimizeResult out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.evaluations += runs[i].evaluations;
    out.converged = out.converged && runs[i].converged;
    if (runs[i].f < runs[best].f) best = i;
  }
  out.x = runs[best].x;
  out.f = runs[best].f;

  // Probe certification around the incumbent; polish from any better probe.
  for (int round = 0; round < 4 && options.probes > 0; ++round) {
    Eigen::VectorXd box = half_width.cwiseMax(2.0 * out.x.cwiseAbs());
    std::vector<double> values(options.probes);
    std::vector<Eigen::VectorXd> points(options.probes);
    parallel_for(options.probes, [&](std::size_t k) {
      points[k] = halton_in_box(k + 1 + static_cast<std::size_t>(round) * options.probes, out.x, box);
      values[k] = f(points[k]);
    });
    out.evaluations += static_cast<int>(options.probes);
    out.probes_checked += options.probes;
    auto it = std::min_element(values.begin(), values.end());
    if (!(*it < out.f)) break;
    out.probe_improved = true;
    auto polished = nelder_mead(f, points[static_cast<std::size_t>(it - values.begin())], options.simplex);
    out.evaluations += polished.evaluations;
    out.converged = out.converged && polished.converged;
    runs.push_back(polished);
    if (polished.f < out.f) {
      out.x = polished.x;
      out.f = polished.f;
    }
  }

  out.ties.push_back(out.x);
  for (const auto& r : runs) {
    if (r.f <= out.f + options.tie_tolerance) add_tie(out.ties, r.x);
  }
  return out;
}

}  // namespace liabval
