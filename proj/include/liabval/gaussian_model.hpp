#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "liabval/errors.hpp"
#include "liabval/normal.hpp"
#include "liabval/scenario_tree.hpp"

namespace liabval {

// G_t = A_t + sum_{s<=t} B_{t,s} eps_s with i.i.d. standard normal eps_s
// under P, and dQ/dP = prod_s exp(lambda_s^T eps_s - |lambda_s|^2 / 2).
// Component 1 of G is the liability, components 2..m+1 the instruments, the
// rest side information. Times run 1..T.
template <typename Scalar = double>
class GaussianModel {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Loading {
    int t;
    int s;
    Matrix matrix;
  };

  // Missing loadings are zero. Throws ModelError on inconsistent dimensions
  // or a singular diagonal loading.
  GaussianModel(int n, int horizon, int instruments, std::vector<Vector> drift,
                const std::vector<Loading>& loadings, std::vector<Vector> girsanov)
      : n_(n), horizon_(horizon), m_(instruments), a_(std::move(drift)),
        lambda_(std::move(girsanov)) {
    if (n_ < 1 || horizon_ < 1) throw ModelError("model needs n >= 1 and T >= 1");
    if (m_ < 0 || m_ + 1 > n_) throw ModelError("instrument count must satisfy 0 <= m <= n - 1");
    if (a_.size() != static_cast<std::size_t>(horizon_) ||
        lambda_.size() != static_cast<std::size_t>(horizon_)) {
      throw ModelError("A and lambda need one row per period");
    }
    for (int t = 1; t <= horizon_; ++t) {
      if (a_[idx(t)].size() != n_ || lambda_[idx(t)].size() != n_) {
        throw ModelError("A_" + std::to_string(t) + " or lambda_" + std::to_string(t) +
                         " has the wrong length");
      }
      if (!a_[idx(t)].allFinite() || !lambda_[idx(t)].allFinite()) {
        throw ModelError("non-finite entry in A or lambda at t = " + std::to_string(t));
      }
    }
    b_.assign(static_cast<std::size_t>(horizon_ * (horizon_ + 1) / 2), Matrix::Zero(n_, n_));
    std::vector<bool> seen(b_.size(), false);
    for (const auto& l : loadings) {
      if (l.s < 1 || l.t < l.s || l.t > horizon_) {
        throw ModelError("loading B_{" + std::to_string(l.t) + "," + std::to_string(l.s) +
                         "} needs 1 <= s <= t <= T");
      }
      if (l.matrix.rows() != n_ || l.matrix.cols() != n_) {
        throw ModelError("loading B_{" + std::to_string(l.t) + "," + std::to_string(l.s) +
                         "} is not n x n");
      }
      if (!l.matrix.allFinite()) throw ModelError("non-finite loading entry");
      std::size_t k = slot(l.t, l.s);
      if (seen[k]) {
        throw ModelError("loading B_{" + std::to_string(l.t) + "," + std::to_string(l.s) +
                         "} given twice");
      }
      seen[k] = true;
      b_[k] = l.matrix;
    }
    for (int t = 1; t <= horizon_; ++t) {
      // Row scaling makes the determinant test independent of units.
      Matrix scaled = loading(t, t);
      for (Eigen::Index r = 0; r < scaled.rows(); ++r) {
        Scalar norm = scaled.row(r).cwiseAbs().maxCoeff();
        if (norm == Scalar(0)) throw ModelError("B_{" + std::to_string(t) + "," + std::to_string(t) + "} has a zero row");
        scaled.row(r) /= norm;
      }
      using std::abs;
      if (!(abs(scaled.fullPivLu().determinant()) > Scalar(1e-10))) {
        throw ModelError("B_{" + std::to_string(t) + "," + std::to_string(t) + "} is singular");
      }
    }
  }

  int dimension() const noexcept { return n_; }
  int horizon() const noexcept { return horizon_; }
  int instruments() const noexcept { return m_; }
  const Vector& drift(int t) const { return a_.at(idx(t)); }
  const Vector& girsanov(int t) const { return lambda_.at(idx(t)); }
  const Matrix& loading(int t, int s) const {
    if (s < 1 || t < s || t > horizon_) throw ArgumentError("loading index out of range");
    return b_[slot(t, s)];
  }

  // S_t = sum_{u=t}^T B_{u,t}.
  Matrix cumulative_loading(int t) const {
    Matrix out = Matrix::Zero(n_, n_);
    for (int u = t; u <= horizon_; ++u) out += loading(u, t);
    return out;
  }

 private:
  static std::size_t idx(int t) { return static_cast<std::size_t>(t - 1); }
  static std::size_t slot(int t, int s) { return static_cast<std::size_t>(t * (t - 1) / 2 + s - 1); }

  int n_, horizon_, m_;
  std::vector<Vector> a_;
  std::vector<Matrix> b_;
  std::vector<Vector> lambda_;
};

// Per-period exposure vectors g_1..g_T; X_t = g_t^T G_t.
template <typename Scalar>
using Exposure = std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

template <typename Scalar>
Exposure<Scalar> constant_exposure(const GaussianModel<Scalar>& model,
                                   const typename GaussianModel<Scalar>::Vector& g) {
  return Exposure<Scalar>(static_cast<std::size_t>(model.horizon()), g);
}

// E^Q_u[G_v] - E^P_u[G_v] = sum_{s=u+1}^v B_{v,s} lambda_s.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> measure_shift(const GaussianModel<Scalar>& model, int u,
                                                       int v) {
  if (u < 0 || v <= u || v > model.horizon()) {
    throw ArgumentError("measure_shift needs 0 <= u < v <= T");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(model.dimension());
  for (int s = u + 1; s <= v; ++s) out += model.loading(v, s) * model.girsanov(s);
  return out;
}

// E[(a - sigma e)_+] for standard normal e.
template <typename Scalar>
Scalar positive_part_gaussian(Scalar a, Scalar sigma) {
  if (sigma < Scalar(0)) throw ArgumentError("positive_part_gaussian: negative sigma");
  if (sigma == Scalar(0)) return a > Scalar(0) ? a : Scalar(0);
  Scalar z = a / sigma;
  return a * norm_cdf(z) + sigma * norm_pdf(z);
}

namespace detail {

template <typename Scalar>
void check_exposure(const GaussianModel<Scalar>& model, const Exposure<Scalar>& g) {
  if (g.size() != static_cast<std::size_t>(model.horizon())) {
    throw ArgumentError("exposure needs one vector per period");
  }
  for (const auto& v : g) {
    if (v.size() != model.dimension()) throw ArgumentError("exposure vector has the wrong length");
  }
}

// sum_{j>=s} B_{j,s}^T g_j: the loading of sum_{u>=s} X_u on eps_s.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> exposure_loading(const GaussianModel<Scalar>& model,
                                                          const Exposure<Scalar>& g, int s) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(model.dimension());
  for (int j = s; j <= model.horizon(); ++j) {
    out.noalias() += model.loading(j, s).transpose() * g[static_cast<std::size_t>(j - 1)];
  }
  return out;
}

}  // namespace detail

// sigma_s = |sum_{j>=s} B_{j,s}^T g_j|, s = 1..T (entry s-1).
template <typename Scalar>
std::vector<Scalar> sigma_schedule(const GaussianModel<Scalar>& model, const Exposure<Scalar>& g) {
  detail::check_exposure(model, g);
  std::vector<Scalar> out;
  for (int s = 1; s <= model.horizon(); ++s) out.push_back(detail::exposure_loading(model, g, s).norm());
  return out;
}

// Closed-form values for X_t = g_t^T G_t. Entries are indexed by t = 0..T.
// The random parts of V_t and R_t are conditional means; the constants are
//   V_t = sum_{s>t} E^Q_t[X_s] + K^Q_t = sum_{s>t} E^P_t[X_s] + K^P_t,
//   R_t = V_t + C_t.
template <typename Scalar>
struct GaussianValuation {
  std::vector<Scalar> k_q;
  std::vector<Scalar> k_p;
  std::vector<Scalar> c;
  std::vector<Scalar> sigma;  // sigma[t] = sigma_t, t >= 1; sigma[0] = 0
  std::vector<Scalar> drift;  // drift[t] = sum_{u>=t} g_u^T B_{u,t} lambda_t, t >= 1
  std::vector<Scalar> mean_q;  // sum_{s>t} E^Q_0[X_s]
  std::vector<Scalar> mean_p;  // sum_{s>t} E^P_0[X_s]

  // V_t, R_t evaluated at the expected path under Q from time 0. Where the
  // conditional means are nonrandom (block-diagonal loadings) these are the
  // exact values.
  Scalar expected_v(std::size_t t) const { return mean_q[t] + k_q[t]; }
  Scalar expected_r(std::size_t t) const { return expected_v(t) + c[t]; }
  Scalar v0() const { return expected_v(0); }
  Scalar r0() const { return expected_r(0); }
  Scalar c0() const { return c[0]; }
};

template <typename Scalar>
GaussianValuation<Scalar> gaussian_valuation(const GaussianModel<Scalar>& model,
                                             const Exposure<Scalar>& g, Scalar r0) {
  detail::check_exposure(model, g);
  const int T = model.horizon();
  const auto n = static_cast<std::size_t>(T + 1);
  GaussianValuation<Scalar> out;
  out.k_q.assign(n, Scalar(0));
  out.k_p.assign(n, Scalar(0));
  out.c.assign(n, Scalar(0));
  out.sigma.assign(n, Scalar(0));
  out.drift.assign(n, Scalar(0));
  out.mean_q.assign(n, Scalar(0));
  out.mean_p.assign(n, Scalar(0));
  for (int s = T; s >= 1; --s) {
    auto loading = detail::exposure_loading(model, g, s);
    const auto su = static_cast<std::size_t>(s);
    Scalar sigma = loading.norm();
    Scalar drift = loading.dot(model.girsanov(s));
    Scalar pp = positive_part_gaussian(Scalar(sigma * r0 - drift), sigma);
    out.sigma[su] = sigma;
    out.drift[su] = drift;
    out.c[su - 1] = pp;
    out.k_q[su - 1] = out.k_q[su] + sigma * r0 - drift - pp;
    out.k_p[su - 1] = out.k_p[su] + sigma * r0 - pp;

    const auto& gs = g[su - 1];
    Scalar mp = gs.dot(model.drift(s));
    Scalar mq = mp + gs.dot(measure_shift(model, 0, s));
    out.mean_p[su - 1] = out.mean_p[su] + mp;
    out.mean_q[su - 1] = out.mean_q[su] + mq;
  }
  return out;
}

// sum_{s>t} E^m_t[X_s] given the realized shocks eps_1..eps_t (columns).
template <typename Scalar>
Scalar conditional_mean(const GaussianModel<Scalar>& model, const Exposure<Scalar>& g, int t,
                        const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& shocks,
                        Measure m) {
  detail::check_exposure(model, g);
  if (t < 0 || t > model.horizon() || shocks.cols() < t || (t > 0 && shocks.rows() != model.dimension())) {
    throw ArgumentError("conditional_mean: shocks do not cover times 1..t");
  }
  Scalar acc = Scalar(0);
  for (int s = t + 1; s <= model.horizon(); ++s) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = model.drift(s);
    for (int u = 1; u <= t; ++u) mean += model.loading(s, u) * shocks.col(u - 1);
    if (m == Measure::Q) mean += measure_shift(model, t, s);
    acc += g[static_cast<std::size_t>(s - 1)].dot(mean);
  }
  return acc;
}

}  // namespace liabval
