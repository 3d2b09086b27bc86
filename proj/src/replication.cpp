#include "liabval/replication.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "liabval/errors.hpp"
#include "liabval/valuation.hpp"

namespace liabval {

namespace {

std::string instrument_name(Eigen::Index k) { return "x_f_" + std::to_string(k + 1); }

std::string format_vector(const Eigen::VectorXd& w) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (Eigen::Index i = 0; i < w.size(); ++i) os << (i ? ", " : "") << w[i] + 0.0;
  os << ')';
  return os.str();
}

std::vector<NodeId> leaves_of(const ScenarioTree& tree) {
  auto layer = tree.layer(tree.horizon());
  return {layer.begin(), layer.end()};
}

// Summed flows along each root-to-leaf path: column 0 is X^o, column k+1 is
// instrument k.
Eigen::MatrixXd leaf_sums(const ScenarioTree& tree, const CashflowSet& flows,
                          const std::vector<NodeId>& leaves) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(leaves.size()), flows.instrument_count() + 1);
  s.col(0) = pathwise_sum(tree, flows.liability, leaves);
  for (Eigen::Index k = 0; k < flows.instrument_count(); ++k) {
    s.col(k + 1) = pathwise_sum(tree, flows.instruments.col(k), leaves);
  }
  return s;
}

Eigen::VectorXd leaf_weights(const NodeValues& weights, const std::vector<NodeId>& leaves) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(leaves.size()));
  for (std::size_t i = 0; i < leaves.size(); ++i) w[static_cast<Eigen::Index>(i)] = weights[leaves[i]];
  return w;
}

double cashflow_objective(const ScenarioTree& tree, const NodeValues& weights,
                          const NodeValues& residual, bool root_form) {
  double total = 0.0;
  for (int t = 1; t <= tree.horizon(); ++t) {
    double second_moment = 0.0;
    for (NodeId n : tree.layer(t)) second_moment += weights[n] * residual[n] * residual[n];
    total += root_form ? std::sqrt(second_moment) : second_moment;
  }
  return total;
}

// Largest R~_t - X~_{t+1} - R~_{t+1} over all non-root nodes for the flow x.
double largest_gap(const ScenarioTree& tree, const NodeValues& x, const RiskMeasureSpec& spec) {
  NodeValues r = NodeValues::Zero(static_cast<Eigen::Index>(tree.size()));
  NodeValues y = NodeValues::Zero(r.size());
  double gap = -std::numeric_limits<double>::infinity();
  for (int t = tree.horizon() - 1; t >= 0; --t) {
    for (NodeId n : tree.layer(t)) {
      for (NodeId c : tree.children(n)) y[c] = x[c] + r[c];
      r[n] = rho(tree, n, y, spec);
      for (NodeId c : tree.children(n)) gap = std::max(gap, r[n] - y[c]);
    }
  }
  return gap;
}

}  // namespace

NodeValues node_weights(const ScenarioTree& tree, Measure m) {
  NodeValues w(static_cast<Eigen::Index>(tree.size()));
  w[0] = 1.0;
  for (NodeId n = 1; n < tree.size(); ++n) w[n] = w[*tree.node(n).parent] * tree.branch_prob(n, m);
  return w;
}

WeightSolution cashflow_match(const ScenarioTree& tree, const CashflowSet& flows, Measure m,
                              bool root_form) {
  check_cashflows(tree, flows);
  const Eigen::Index k = flows.instrument_count();
  const NodeValues weights = node_weights(tree, m);
  if (k == 0) return {Eigen::VectorXd(0), cashflow_objective(tree, weights, flows.liability, root_form)};

  const Eigen::Index rows = static_cast<Eigen::Index>(tree.size()) - 1;
  const Eigen::VectorXd sw = weights.tail(rows).cwiseSqrt();
  const Eigen::MatrixXd design = sw.asDiagonal() * flows.instruments.bottomRows(rows);
  const Eigen::VectorXd target = sw.cwiseProduct(flows.liability.tail(rows));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::vector<std::string> details;
    for (Eigen::Index i = qr.rank(); i < k; ++i) {
      details.push_back(instrument_name(qr.colsPermutation().indices()[i]) +
                        " is linearly dependent on the other instruments");
    }
    throw DegeneracyError("cashflow_match: singular normal-equations matrix", details);
  }
  WeightSolution out;
  out.v_hat = qr.solve(target);
  if (root_form) {
    auto f = [&](const Eigen::VectorXd& v) {
      return cashflow_objective(tree, weights, flows.residual(v), true);
    };
    Eigen::VectorXd half = (2.0 * out.v_hat.cwiseAbs()).cwiseMax(1.0);
    MinimizeOptions opts;
    opts.restarts = 2;
    opts.probes = 200;
    out.v_hat = robust_minimize(f, {out.v_hat}, out.v_hat, half, opts).x;
  }
  out.objective = cashflow_objective(tree, weights, flows.residual(out.v_hat), root_form);
  return out;
}

WeightSolution terminal_value_match(const ScenarioTree& tree, const CashflowSet& flows, Measure m) {
  check_cashflows(tree, flows);
  const auto leaves = leaves_of(tree);
  const Eigen::VectorXd pi = leaf_weights(node_weights(tree, m), leaves);
  const Eigen::MatrixXd s = leaf_sums(tree, flows, leaves);
  const Eigen::Index k = flows.instrument_count();

  WeightSolution out;
  out.v_hat = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    const Eigen::MatrixXd sf = s.rightCols(k);
    const Eigen::MatrixXd gram = sf.transpose() * pi.asDiagonal() * sf;
    const Eigen::VectorXd moment = sf.transpose() * pi.asDiagonal() * s.col(0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const auto& sv = svd.singularValues();
    const double cond = sv[k - 1] > 0.0 ? sv[0] / sv[k - 1] : std::numeric_limits<double>::infinity();
    if (!(cond < 1e12)) {
      std::ostringstream os;
      os << "Gram matrix of summed instrument flows has condition number " << cond;
      throw DegeneracyError("terminal_value_match: Gram matrix not invertible", {os.str()});
    }
    out.v_hat = gram.partialPivLu().solve(moment);
  }
  const Eigen::VectorXd resid = s.col(0) - s.rightCols(k) * out.v_hat;
  out.objective = std::sqrt(pi.dot(resid.cwiseAbs2()));
  return out;
}

double expected_pathwise_max(const ScenarioTree& tree, const NodeValues& c) {
  const int T = tree.horizon();
  if (T == 0) return 0.0;
  // Running maximum of C_0..C_{t} pushed down the tree, C_T excluded.
  NodeValues running(static_cast<Eigen::Index>(tree.size()));
  running[0] = c[0];
  for (NodeId n = 1; n < tree.size(); ++n) {
    const double prev = running[*tree.node(n).parent];
    running[n] = tree.time(n) < T ? std::max(prev, c[n]) : prev;
  }
  const NodeValues q = node_weights(tree, Measure::Q);
  double total = 0.0;
  for (NodeId leaf : tree.layer(T)) total += q[leaf] * running[leaf];
  return total;
}

double psi_objective(const ScenarioTree& tree, const CashflowSet& flows, const RiskMeasureSpec& spec,
                     const Eigen::VectorXd& v) {
  return expected_pathwise_max(tree, backward_valuation(tree, flows.residual(v), spec).c);
}

double psi_tilde(const ScenarioTree& tree, const CashflowSet& flows, const RiskMeasureSpec& spec,
                 const Eigen::VectorXd& w) {
  return expected_pathwise_max(tree, backward_valuation(tree, flows.lifted(w), spec).c);
}

bool WellposedReport::coercive() const noexcept {
  return std::none_of(degenerate.begin(), degenerate.end(),
                      [](const DegenerateDirection& d) { return d.instrument_only; });
}

std::vector<std::string> WellposedReport::messages() const {
  std::vector<std::string> out;
  for (const auto& d : degenerate) {
    std::ostringstream os;
    os << "degenerate direction w = " << format_vector(d.w) << " (" << d.source
       << "): capital never exceeds the continuation value, largest gap " << d.max_gap;
    out.push_back(os.str());
  }
  return out;
}

WellposedReport check_wellposed(const ScenarioTree& tree, const CashflowSet& flows,
                                const RiskMeasureSpec& spec, std::uint64_t seed) {
  check_cashflows(tree, flows);
  const Eigen::Index dim = flows.instrument_count() + 1;

  std::vector<std::pair<Eigen::VectorXd, std::string>> probes;
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(dim, i);
    probes.emplace_back(e, "axis");
    probes.emplace_back(-e, "axis");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 48; ++i) {
    if (i >= 32 && dim == 1) break;
    Eigen::VectorXd w(dim);
    for (Eigen::Index j = 0; j < dim; ++j) w[j] = normal(rng);
    if (i >= 32) w[0] = 0.0;
    if (w.norm() > 0.0) probes.emplace_back(w.normalized(), "random");
  }

  // Directions w with w^T sum_t Z_t leaf-constant: kernel of the P-covariance.
  const auto leaves = leaves_of(tree);
  const Eigen::VectorXd pi = leaf_weights(node_weights(tree, Measure::P), leaves);
  Eigen::MatrixXd s = leaf_sums(tree, flows, leaves);
  s.rightCols(dim - 1) *= -1.0;
  const Eigen::RowVectorXd mean = pi.transpose() * s;
  const Eigen::MatrixXd centred = s.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * pi.asDiagonal() * centred;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (eig.eigenvalues()[i] <= 1e-12 * scale) {
      Eigen::VectorXd w = eig.eigenvectors().col(i).normalized();
      probes.emplace_back(w, "kernel");
      probes.emplace_back(-w, "kernel");
    }
  }

  WellposedReport report;
  report.smallest_instrument_psi = std::numeric_limits<double>::infinity();
  for (const auto& [w, source] : probes) {
    const NodeValues x = flows.lifted(w);
    const double tol = 1e-10 * std::max(1.0, x.cwiseAbs().maxCoeff());
    const double gap = largest_gap(tree, x, spec);
    const bool instrument_only = std::abs(w[0]) <= 1e-12;
    ++report.directions_checked;
    if (gap <= tol) {
      report.degenerate.push_back({w, source, gap, instrument_only});
      if (instrument_only) report.smallest_instrument_psi = 0.0;
    } else if (instrument_only) {
      report.smallest_instrument_psi =
          std::min(report.smallest_instrument_psi, psi_tilde(tree, flows, spec, w));
    }
  }
  return report;
}

PsiMinimum minimize_psi(const ScenarioTree& tree, const CashflowSet& flows, const RiskMeasureSpec& spec,
                        const MinimizeOptions& options, std::uint64_t seed) {
  PsiMinimum out;
  out.report = check_wellposed(tree, flows, spec, seed);
  if (!out.report.coercive()) {
    throw DegeneracyError("minimize_psi: objective is not coercive", out.report.messages());
  }
  const Eigen::Index k = flows.instrument_count();
  auto f = [&](const Eigen::VectorXd& v) { return psi_objective(tree, flows, spec, v); };
  if (k == 0) {
    out.v_hat = Eigen::VectorXd(0);
    out.objective = f(out.v_hat);
    out.ties = {out.v_hat};
    return out;
  }

  std::vector<Eigen::VectorXd> seeds{Eigen::VectorXd::Zero(k)};
  try {
    seeds.push_back(terminal_value_match(tree, flows, Measure::P).v_hat);
  } catch (const DegeneracyError&) {
  }
  for (const auto& d : out.report.degenerate) {
    if (d.w[0] > 1e-12) seeds.push_back(-d.w.tail(k) / d.w[0]);
  }
  double best_seed = std::numeric_limits<double>::infinity();
  for (const auto& s : seeds) best_seed = std::min(best_seed, f(s));

  // Far out, psi(v) ~ |v| psi~((0, v/|v|)) >= |v| c with c the smallest
  // instrument-direction probe value. Heuristic radius of the sublevel set of
  // the best seed, doubled because c is itself a probe estimate.
  const double c = out.report.smallest_instrument_psi;
  const double offset = std::max(psi_tilde(tree, flows, spec, Eigen::VectorXd::Unit(k + 1, 0)),
                                 psi_tilde(tree, flows, spec, -Eigen::VectorXd::Unit(k + 1, 0)));
  double radius = c > 0.0 ? 2.0 * (best_seed + offset) / c : 1e3;
  double seed_scale = 1.0;
  for (const auto& s : seeds) seed_scale = std::max(seed_scale, s.cwiseAbs().maxCoeff());
  radius = std::clamp(radius, 1.0, 10.0 * seed_scale);
  out.search_radius = radius;

  const MinimizeResult r = robust_minimize(f, seeds, Eigen::VectorXd::Zero(k),
                                           Eigen::VectorXd::Constant(k, radius), options);
  out.v_hat = r.x;
  out.objective = r.f;
  out.ties = r.ties;
  out.converged = r.converged;
  out.probes_checked = r.probes_checked;
  return out;
}

}  // namespace liabval
