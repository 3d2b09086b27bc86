#pragma once

// Independent reference computations used only by the tests. They are
// deliberately naive: brute force over atoms, bisection, plain quadrature.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace liabval::oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Bisection on the erfc-based CDF; the upper half uses Phi(-x) = 1 - p so the
// tail keeps full relative precision.
inline double inverse_normal_bisection(double p) {
  if (p > 0.5) return -inverse_normal_bisection(1.0 - p);
  double lo = -40.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Composite Gauss-Legendre (5 points) on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                              0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                              0.2369268850561891, 0.2369268850561891};
  double h = (b - a) / panels, acc = 0.0;
  for (int k = 0; k < panels; ++k) {
    double mid = a + (k + 0.5) * h;
    for (int j = 0; j < 5; ++j) acc += w[j] * f(mid + 0.5 * h * x[j]) * 0.5 * h;
  }
  return acc;
}

// min{m : P(Y <= m) >= q}, scanning every atom as a candidate.
inline double quantile_scan(const std::vector<double>& y, const std::vector<double>& p, double q) {
  double best = std::numeric_limits<double>::infinity();
  for (double m : y) {
    double cdf = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] <= m) cdf += p[i];
    }
    if (cdf >= q - 1e-15 && m < best) best = m;
  }
  return best;
}

// (1/u) int_{1-u}^1 F^{-1}: take mass u greedily from the largest atoms.
inline double tail_mean(const std::vector<double>& y, const std::vector<double>& p, double u) {
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return y[a] > y[b]; });
  double left = u, acc = 0.0;
  for (std::size_t i : order) {
    double take = std::min(left, p[i]);
    acc += take * y[i];
    left -= take;
    if (left <= 0.0) break;
  }
  return acc / u;
}

struct McEstimate {
  double mean;
  double stderr_;
};

inline McEstimate monte_carlo(const std::function<double(double)>& f, std::size_t n,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = f(z(rng));
    s += v;
    s2 += v * v;
  }
  double mean = s / static_cast<double>(n);
  double var = s2 / static_cast<double>(n) - mean * mean;
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
}

}  // namespace liabval::oracle
