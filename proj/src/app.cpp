#include "liabval/app.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "liabval/cashflows.hpp"
#include "liabval/errors.hpp"
#include "liabval/gaussian_replication.hpp"
#include "liabval/io.hpp"
#include "liabval/parallel.hpp"
#include "liabval/replication.hpp"
#include "liabval/synthetic.hpp"
#include "liabval/valuation.hpp"

namespace liabval::app {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr double kRelativeTolerance = 1e-10;
constexpr double kAbsoluteTolerance = 1e-12;
constexpr double kTieTolerance = 1e-9;
constexpr double kMcStandardErrors = 4.0;
const double kFanLevels[] = {0.05, 0.25, 0.5, 0.75, 0.95};

ojson tolerances(const RunConfig& cfg) {
  return {{"probability", kProbabilityTolerance},
          {"relative", kRelativeTolerance},
          {"absolute", kAbsoluteTolerance},
          {"tie", kTieTolerance},
          {"mc_standard_errors", kMcStandardErrors},
          {"enumeration_guard", cfg.verification.guard}};
}

double deviation(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

ojson vec_json(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

Criterion parse_criterion(const std::string& s) {
  if (s == "none") return Criterion::none;
  if (s == "fixed") return Criterion::fixed;
  if (s == "cashflow_l2root") return Criterion::cashflow_l2root;
  if (s == "cashflow_l2") return Criterion::cashflow_l2;
  if (s == "terminal_value") return Criterion::terminal_value;
  if (s == "min_expected_max_c") return Criterion::min_expected_max_c;
  throw DataError("unknown replication criterion '" + s + "'");
}

// Replication weights and the report block for a tree run.
struct TreeReplication {
  Eigen::VectorXd v;
  ojson block;
};

TreeReplication replicate_on_tree(const RunConfig& cfg, const TreeInput& in, std::vector<std::string>& warnings) {
  const Eigen::Index m = in.flows.instrument_count();
  TreeReplication out;
  out.v = Eigen::VectorXd::Zero(m);
  out.block = {{"criterion", to_string(cfg.criterion)}};
  double objective = std::numeric_limits<double>::quiet_NaN();
  ojson ties = ojson::array();
  ojson degeneracy = ojson::array();
  switch (cfg.criterion) {
    case Criterion::none:
      break;
    case Criterion::fixed:
      if (cfg.weights.size() != m) {
        throw DataError("replication.weights has " + std::to_string(cfg.weights.size()) +
                        " entries but the tree has " + std::to_string(m) + " instruments");
      }
      out.v = cfg.weights;
      break;
    case Criterion::cashflow_l2root:
    case Criterion::cashflow_l2: {
      auto sol = cashflow_match(in.tree, in.flows, cfg.measure, cfg.criterion == Criterion::cashflow_l2root);
      out.v = sol.v_hat;
      objective = sol.objective;
      break;
    }
    case Criterion::terminal_value: {
      auto sol = terminal_value_match(in.tree, in.flows, cfg.measure);
      out.v = sol.v_hat;
      objective = sol.objective;
      break;
    }
    case Criterion::min_expected_max_c: {
      auto sol = minimize_psi(in.tree, in.flows, cfg.spec, {}, cfg.seed);
      out.v = sol.v_hat;
      objective = sol.objective;
      for (const auto& t : sol.ties) ties.push_back(vec_json(t));
      for (const auto& d : sol.report.degenerate) {
        degeneracy.push_back({{"w", vec_json(d.w)}, {"source", d.source}, {"max_gap", d.max_gap},
                              {"instrument_only", d.instrument_only}});
      }
      if (!sol.converged) warnings.push_back("psi minimizer stagnated; best iterate reported");
      if (sol.ties.size() > 1) warnings.push_back("psi minimizer found tied weight vectors");
      break;
    }
  }
  if (cfg.criterion == Criterion::cashflow_l2root || cfg.criterion == Criterion::cashflow_l2 ||
      cfg.criterion == Criterion::terminal_value) {
    out.block["measure"] = cfg.measure == Measure::P ? "P" : "Q";
  }
  out.block["v_hat"] = vec_json(out.v);
  out.block["objective"] = objective;
  out.block["degeneracy_report"] = degeneracy;
  out.block["ties"] = ties;
  return out;
}

ojson tree_fans(const ScenarioTree& tree, const NodeValues& pw, const ValuationResult& res,
                std::string& csv) {
  csv = "t,quantity,mean,q05,q25,q50,q75,q95\n";
  for (int t = 0; t <= tree.horizon(); ++t) {
    auto layer = tree.layer(t);
    std::vector<double> probs;
    for (NodeId n : layer) probs.push_back(pw[static_cast<Eigen::Index>(n)]);
    for (auto [name, values] : {std::pair{"v", &res.v}, std::pair{"c", &res.c}, std::pair{"r", &res.r}}) {
      std::vector<double> x;
      double mean = 0.0;
      for (std::size_t i = 0; i < layer.size(); ++i) {
        x.push_back((*values)[static_cast<Eigen::Index>(layer[i])]);
        mean += probs[i] * x.back();
      }
      csv += std::to_string(t) + "," + name + "," + fmt(mean);
      for (double q : kFanLevels) csv += "," + fmt(quantile(DiscreteLaw{x, probs}, q));
      csv += "\n";
    }
  }
  return {};
}

Outcome run_tree(const RunConfig& cfg, ojson& report) {
  Outcome outcome;
  TreeInput in = load_tree_csv(cfg.input, cfg.discount_curve);
  require_valid(in.tree);
  check_cashflows(in.tree, in.flows);
  if (in.renormalized_parents > 0) {
    outcome.warnings.push_back("branch probabilities renormalized below " +
                               std::to_string(in.renormalized_parents) + " parent node(s)");
  }
  const ScenarioTree& tree = in.tree;
  const auto n = static_cast<Eigen::Index>(tree.size());

  TreeReplication rep = replicate_on_tree(cfg, in, outcome.warnings);
  const NodeValues residual = in.flows.residual(rep.v);
  const NodeValues replication = in.flows.replication(rep.v);
  const ValuationResult res = backward_valuation(tree, residual, cfg.spec);
  const NodeValues l = liability_value(tree, in.flows.liability, replication, res);
  const NodeValues eta = cost_of_capital_rates(tree, res, residual);
  const StoppingTime tau = optimal_default_time(tree, res, tree.root());

  const double market_price = price_cashflow(tree, replication, tree.root());
  const double entitled = price_cashflow(tree, in.flows.liability, tree.root());

  ojson nodes = ojson::object();
  std::string nodes_csv = "node_id,parent_id,time,v,c,r,l,eta,default_flag,tau_star\n";
  for (NodeId id = 0; id < tree.size(); ++id) {
    const Eigen::Index k = static_cast<Eigen::Index>(id);
    const auto& node = tree.node(id);
    // tau* from the root, when already decided by the information at this node.
    std::optional<int> tau_here;
    const NodeId leaf = tree.descendants_at(id, tree.horizon()).front();
    if (auto it = tau.at_leaf.find(leaf); it != tau.at_leaf.end() && it->second <= node.time) {
      tau_here = it->second;
    }
    if (tree.is_leaf(id) && !tau_here) tau_here = tree.horizon() + 1;
    ojson entry = {{"time", node.time}, {"v", res.v[k]}, {"c", res.c[k]}, {"r", res.r[k]},
                   {"l", l[k]},         {"eta", eta[k]}, {"default_flag", static_cast<bool>(res.defaulted[id])}};
    entry["tau_star"] = tau_here ? ojson(*tau_here) : ojson(nullptr);
    nodes[node.label] = entry;
    nodes_csv += node.label + "," + (node.parent ? tree.node(*node.parent).label : "") + "," +
                 std::to_string(node.time) + "," + fmt(res.v[k]) + "," + fmt(res.c[k]) + "," +
                 fmt(res.r[k]) + "," + fmt(l[k]) + "," + fmt(eta[k]) + "," +
                 (res.defaulted[id] ? "1" : "0") + "," + (tau_here ? std::to_string(*tau_here) : "") + "\n";
  }

  // Q-submartingale of the cumulative residual value: E^Q_t[X_{t+1} + V_{t+1}] - V_t >= 0.
  double min_gap = std::numeric_limits<double>::infinity();
  std::string worst;
  NodeValues y = residual + res.v;
  for (int t = 0; t < tree.horizon(); ++t) {
    NodeValues ey = one_step_expectation(tree, y, t, Measure::Q);
    for (NodeId id : tree.layer(t)) {
      const double gap = ey[static_cast<Eigen::Index>(id)] - res.v[static_cast<Eigen::Index>(id)];
      if (gap < min_gap) {
        min_gap = gap;
        worst = tree.node(id).label;
      }
    }
  }
  const bool submartingale_ok = !(min_gap < -kAbsoluteTolerance);
  if (!submartingale_ok) outcome.warnings.push_back("submartingale check failed at node " + worst);

  ojson eta_table = ojson::array();
  for (NodeId id = 0; id < tree.size(); ++id) {
    if (tree.is_leaf(id)) continue;
    eta_table.push_back({{"node_id", tree.node(id).label}, {"time", tree.time(id)},
                         {"eta", eta[static_cast<Eigen::Index>(id)]}});
  }

  ojson cross = ojson::object();
  if (cfg.verification.cross_checks) {
    auto e = enumerate_optimal_stopping(tree, tree.root(), res.r, residual, cfg.verification.guard);
    const double dv = deviation(res.v0(), e.policyholder_inf);
    const double dc = deviation(res.c0(), e.owner_sup);
    const bool ok = dv <= kRelativeTolerance && dc <= kRelativeTolerance;
    cross["stopping_enumeration"] = {{"passed", ok}, {"decision_nodes", e.decision_nodes},
                                     {"v0_deviation", dv}, {"c0_deviation", dc}};
    if (!ok) outcome.warnings.push_back("recursion and stopping enumeration disagree at the root");
  }

  report["engine"] = "tree";
  report["summary"] = {{"V0", res.v0()},
                       {"C0", res.c0()},
                       {"R0", res.r0()},
                       {"L0", l[0]},
                       {"market_price_replication", market_price},
                       {"option_to_default_value", entitled - l[0]}};
  report["replication"] = rep.block;
  report["nodes"] = nodes;
  report["diagnostics"] = {{"submartingale", {{"passed", submartingale_ok}, {"min_gap", min_gap}, {"worst_node", worst}}},
                           {"eta", eta_table},
                           {"option_to_default_value", entitled - l[0]},
                           {"renormalized_parents", in.renormalized_parents},
                           {"cross_checks", cross}};

  std::string fan_csv;
  tree_fans(tree, node_weights(tree, Measure::P), res, fan_csv);
  write_file_atomic(cfg.output_dir / "nodes.csv", nodes_csv);
  write_file_atomic(cfg.output_dir / "plot_series.csv", fan_csv);
  outcome.files = {cfg.output_dir / "nodes.csv", cfg.output_dir / "plot_series.csv"};
  (void)n;
  return outcome;
}

struct GaussianMc {
  double v0 = 0.0;
  double stderr_ = 0.0;
};

// Per-period Monte Carlo of C_{s-1} = E^Q[(sigma_s r0 - Y_s)_+] with Y_s the
// innovation of X + V sampled under Q, using the innovation itself as a
// control variate.
GaussianMc gaussian_mc(const GaussianModel<double>& model, const Exposure<double>& g, double r0,
                       const GaussianValuation<double>& val, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int n = model.dimension();
  GaussianMc out;
  out.v0 = val.mean_q[0];
  double var = 0.0;
  Eigen::VectorXd z(n);
  for (int s = 1; s <= model.horizon(); ++s) {
    const Eigen::VectorXd b = detail::exposure_loading(model, g, s);
    const double sigma = b.norm();
    const Eigen::VectorXd eps_shift = model.girsanov(s);
    std::vector<double> pay(samples), ctl(samples);
    for (std::size_t k = 0; k < samples; ++k) {
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      const double x = b.dot(z + eps_shift);  // Q-law of the innovation
      pay[k] = std::max(0.0, sigma * r0 - x);
      ctl[k] = x - b.dot(eps_shift);
    }
    const double ns = static_cast<double>(samples);
    double mp = 0.0, mc = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      mp += pay[k];
      mc += ctl[k];
    }
    mp /= ns;
    mc /= ns;
    double cov = 0.0, vc = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      cov += (pay[k] - mp) * (ctl[k] - mc);
      vc += (ctl[k] - mc) * (ctl[k] - mc);
    }
    const double beta = vc > 0.0 ? cov / vc : 0.0;
    double est = 0.0, v2 = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      const double e = pay[k] - beta * ctl[k];
      est += e;
      v2 += e * e;
    }
    est /= ns;
    var += std::max(0.0, v2 / ns - est * est) / ns;
    out.v0 += sigma * r0 - b.dot(eps_shift) - est;
  }
  out.stderr_ = std::sqrt(var);
  return out;
}

Outcome run_gaussian(const RunConfig& cfg, ojson& report) {
  Outcome outcome;
  const GaussianModel<double> model = gaussian_model_from_json(read_json_file(cfg.input));
  const int n = model.dimension();
  const int m = model.instruments();
  const double base = r0(cfg.spec);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  ojson block = {{"criterion", to_string(cfg.criterion)}};
  double objective = std::numeric_limits<double>::quiet_NaN();
  ojson ties = ojson::array();
  switch (cfg.criterion) {
    case Criterion::none:
      break;
    case Criterion::fixed:
      if (cfg.weights.size() != m) throw DataError("replication.weights must have m entries");
      v = cfg.weights;
      break;
    case Criterion::min_expected_max_c:
      if (m > 0) {
        auto sol = optimal_replication_g(model, cfg.spec);
        v = sol.v_hat;
        objective = sol.objective;
        for (const auto& t : sol.ties) ties.push_back(vec_json(t));
        if (!sol.converged) outcome.warnings.push_back("replication minimizer stagnated; best iterate reported");
        if (sol.ties.size() > 1) outcome.warnings.push_back("replication minimizer found tied weight vectors");
      }
      break;
    default:
      throw DataError(std::string("criterion ") + to_string(cfg.criterion) +
                      " is only available for the tree engine");
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  g[0] = 1.0;
  g.segment(1, m) = -v;
  if (cfg.criterion == Criterion::none || cfg.criterion == Criterion::fixed) {
    objective = replication_objective(model, g, base);
  }
  block["v_hat"] = vec_json(v);
  block["objective"] = objective;
  block["degeneracy_report"] = ojson::array();
  block["ties"] = ties;

  const auto exposure = constant_exposure(model, g);
  const auto val = gaussian_valuation(model, exposure, base);

  double market_price = 0.0, entitled = 0.0;
  for (int t = 1; t <= model.horizon(); ++t) {
    const Eigen::VectorXd mean_q = model.drift(t) + measure_shift(model, 0, t);
    market_price += v.dot(mean_q.segment(1, m));
    entitled += mean_q[0];
  }
  const double l0 = market_price + val.v0();

  ojson periods = ojson::array();
  std::string csv = "t,c,k_q,k_p,expected_v,expected_r\n";
  for (int t = 0; t <= model.horizon(); ++t) {
    const auto k = static_cast<std::size_t>(t);
    periods.push_back({{"t", t}, {"c", val.c[k]}, {"k_q", val.k_q[k]}, {"k_p", val.k_p[k]},
                       {"sigma", val.sigma[k]}, {"drift", val.drift[k]},
                       {"expected_v", val.expected_v(k)}, {"expected_r", val.expected_r(k)}});
    csv += std::to_string(t) + "," + fmt(val.c[k]) + "," + fmt(val.k_q[k]) + "," + fmt(val.k_p[k]) + "," +
           fmt(val.expected_v(k)) + "," + fmt(val.expected_r(k)) + "\n";
  }

  ojson cross = ojson::object();
  if (cfg.verification.cross_checks) {
    auto mc = gaussian_mc(model, exposure, base, val, cfg.verification.mc_samples, cfg.seed);
    const double z = mc.stderr_ > 0.0 ? std::abs(mc.v0 - val.v0()) / mc.stderr_ : 0.0;
    const bool ok = z <= kMcStandardErrors || std::abs(mc.v0 - val.v0()) <= kAbsoluteTolerance;
    cross["monte_carlo"] = {{"passed", ok}, {"samples", cfg.verification.mc_samples}, {"v0", mc.v0},
                            {"stderr", mc.stderr_}, {"standard_errors", z}};
    if (!ok) outcome.warnings.push_back("closed form and Monte Carlo disagree");
  }

  report["engine"] = "gaussian";
  report["summary"] = {{"V0", val.v0()},       {"C0", val.c0()},
                       {"R0", val.r0()},       {"L0", l0},
                       {"market_price_replication", market_price},
                       {"option_to_default_value", entitled - l0}};
  report["replication"] = block;
  report["periods"] = periods;
  report["diagnostics"] = {{"r0_base_quantile", base},
                           {"option_to_default_value", entitled - l0},
                           {"cross_checks", cross}};
  write_file_atomic(cfg.output_dir / "plot_series.csv", csv);
  outcome.files = {cfg.output_dir / "plot_series.csv"};
  return outcome;
}

Outcome run_iid(const RunConfig& cfg, ojson& report) {
  Outcome outcome;
  if (cfg.criterion != Criterion::none) throw DataError("the iid engine takes no replication criterion");
  const IidInput in = iid_from_json(read_json_file(cfg.input));
  const auto val = in.is_normal() ? iid_closed_form(in.normal, cfg.spec) : iid_closed_form(in.discrete, cfg.spec);
  double entitled = 0.0;
  if (in.is_normal()) {
    for (const auto& p : in.normal) entitled += p.mean_q;
  } else {
    for (const auto& p : in.discrete) {
      for (std::size_t k = 0; k < p.values.size(); ++k) entitled += p.values[k] * p.q[k];
    }
  }
  ojson periods = ojson::array();
  std::string csv = "t,v,c,r\n";
  for (std::size_t t = 0; t < val.v.size(); ++t) {
    periods.push_back({{"t", t}, {"v", val.v[t]}, {"c", val.c[t]}, {"r", val.r[t]}});
    csv += std::to_string(t) + "," + fmt(val.v[t]) + "," + fmt(val.c[t]) + "," + fmt(val.r[t]) + "\n";
  }
  ojson cross = ojson::object();
  if (cfg.verification.cross_checks && !in.is_normal()) {
    std::size_t leaves = 1;
    for (const auto& p : in.discrete) leaves *= p.values.size();
    if (leaves > 100000) throw GuardError("iid product tree would have more than 1e5 leaves");
    auto c = product_case(in.discrete);
    auto res = backward_valuation(c.tree, c.flows.liability, cfg.spec);
    const double dev = std::max({deviation(res.v0(), val.v[0]), deviation(res.c0(), val.c[0]),
                                 deviation(res.r0(), val.r[0])});
    const bool ok = dev <= kRelativeTolerance;
    cross["product_tree"] = {{"passed", ok}, {"max_deviation", dev}};
    if (!ok) outcome.warnings.push_back("closed form and product tree disagree");
  }
  report["engine"] = "iid";
  report["summary"] = {{"V0", val.v[0]},
                       {"C0", val.c[0]},
                       {"R0", val.r[0]},
                       {"L0", val.v[0]},
                       {"market_price_replication", 0.0},
                       {"option_to_default_value", entitled - val.v[0]}};
  report["replication"] = {{"criterion", "none"}, {"v_hat", ojson::array()}, {"objective", nullptr},
                           {"degeneracy_report", ojson::array()}, {"ties", ojson::array()}};
  report["periods"] = periods;
  report["diagnostics"] = {{"option_to_default_value", entitled - val.v[0]}, {"cross_checks", cross}};
  write_file_atomic(cfg.output_dir / "plot_series.csv", csv);
  outcome.files = {cfg.output_dir / "plot_series.csv"};
  return outcome;
}

void finish(const RunConfig& cfg, Outcome& outcome, ojson& report, const char* file) {
  report["warnings"] = outcome.warnings;
  if (cfg.strict && !outcome.warnings.empty()) {
    throw ValidationError("warnings raised in strict mode", outcome.warnings);
  }
  const auto path = cfg.output_dir / file;
  write_file_atomic(path, dump(report));
  outcome.files.insert(outcome.files.begin(), path);
}

ojson header(const RunConfig& cfg, const char* command) {
  return {{"command", command},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg.seed},
          {"risk_measure", risk_measure_to_json(cfg.spec)},
          {"tolerances", tolerances(cfg)}};
}

struct Suite {
  std::string name;
  std::size_t cases = 0;
  double max_deviation = 0.0;
  double tolerance = kRelativeTolerance;
  bool passed() const { return max_deviation <= tolerance; }
};

Suite recursion_vs_enumeration(const RunConfig& cfg) {
  Suite s{"recursion_vs_enumeration"};
  std::mt19937_64 rng(cfg.seed);
  RandomTreeOptions opts;
  opts.max_decision_nodes = cfg.verification.guard;
  for (std::size_t i = 0; i < cfg.verification.suite_trees; ++i) {
    auto c = random_case(rng, opts);
    auto res = backward_valuation(c.tree, c.flows.liability, cfg.spec);
    for (NodeId id = 0; id < c.tree.size(); ++id) {
      if (c.tree.is_leaf(id)) continue;
      auto e = enumerate_optimal_stopping(c.tree, id, res.r, c.flows.liability, cfg.verification.guard);
      const auto k = static_cast<Eigen::Index>(id);
      s.max_deviation = std::max({s.max_deviation, deviation(res.v[k], e.policyholder_inf),
                                  deviation(res.c[k], e.owner_sup)});
    }
    ++s.cases;
  }
  return s;
}

Suite gaussian_vs_iid(const RunConfig& cfg) {
  Suite s{"gaussian_block_diagonal_vs_iid"};
  std::mt19937_64 rng(cfg.seed + 1);
  std::normal_distribution<double> normal;
  RandomModelOptions opts;
  opts.block_diagonal = true;
  const double base = r0(cfg.spec);
  for (std::size_t i = 0; i < cfg.verification.suite_models; ++i) {
    auto model = random_gaussian_model(rng, opts);
    Eigen::VectorXd g(model.dimension());
    for (auto& x : g) x = normal(rng);
    auto val = gaussian_valuation(model, constant_exposure(model, g), base);
    std::vector<NormalPeriodLaw> laws;
    for (int t = 1; t <= model.horizon(); ++t) {
      const Eigen::VectorXd b = model.loading(t, t).transpose() * g;
      laws.push_back({g.dot(model.drift(t)), g.dot(model.drift(t) + model.loading(t, t) * model.girsanov(t)),
                      b.norm()});
    }
    auto iid = iid_closed_form(laws, cfg.spec);
    for (int t = 0; t <= model.horizon(); ++t) {
      const auto k = static_cast<std::size_t>(t);
      s.max_deviation = std::max({s.max_deviation, deviation(val.expected_v(k), iid.v[k]),
                                  deviation(val.c[k], iid.c[k]), deviation(val.expected_r(k), iid.r[k])});
    }
    ++s.cases;
  }
  return s;
}

Suite terminal_value_vs_least_squares(const RunConfig& cfg) {
  Suite s{"terminal_value_vs_least_squares"};
  std::mt19937_64 rng(cfg.seed + 2);
  RandomTreeOptions opts;
  opts.min_horizon = 2;
  opts.instruments = 2;
  for (std::size_t i = 0; i < cfg.verification.suite_trees; ++i) {
    auto c = random_case(rng, opts);
    if (c.tree.layer(c.tree.horizon()).size() < 4) continue;
    WeightSolution sol;
    try {
      sol = terminal_value_match(c.tree, c.flows, Measure::Q);
    } catch (const DegeneracyError&) {
      continue;
    }
    auto leaves = c.tree.layer(c.tree.horizon());
    std::vector<NodeId> lv(leaves.begin(), leaves.end());
    Eigen::MatrixXd a(static_cast<Eigen::Index>(lv.size()), 2);
    Eigen::VectorXd b = pathwise_sum(c.tree, c.flows.liability, lv);
    for (Eigen::Index k = 0; k < 2; ++k) a.col(k) = pathwise_sum(c.tree, c.flows.instruments.col(k), lv);
    for (std::size_t j = 0; j < lv.size(); ++j) {
      const double w = std::sqrt(c.tree.path_prob(0, lv[j], Measure::Q));
      a.row(static_cast<Eigen::Index>(j)) *= w;
      b[static_cast<Eigen::Index>(j)] *= w;
    }
    const Eigen::VectorXd ls = a.colPivHouseholderQr().solve(b);
    s.max_deviation = std::max(s.max_deviation, (sol.v_hat - ls).cwiseAbs().maxCoeff() / std::max(1.0, ls.norm()));
    ++s.cases;
  }
  return s;
}

}  // namespace

const char* to_string(Criterion c) noexcept {
  switch (c) {
    case Criterion::none: return "none";
    case Criterion::fixed: return "fixed";
    case Criterion::cashflow_l2root: return "cashflow_l2root";
    case Criterion::cashflow_l2: return "cashflow_l2";
    case Criterion::terminal_value: return "terminal_value";
    case Criterion::min_expected_max_c: return "min_expected_max_c";
  }
  return "none";
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  RunConfig cfg;
  cfg.source = j;
  try {
    const std::string engine = j.value("engine", "tree");
    if (engine == "tree") cfg.engine = Engine::tree;
    else if (engine == "gaussian") cfg.engine = Engine::gaussian;
    else if (engine == "iid") cfg.engine = Engine::iid;
    else throw DataError("engine must be tree, gaussian or iid, not '" + engine + "'");

    if (!j.contains("input")) throw DataError("config: missing field 'input'");
    cfg.input = j.at("input").get<std::string>();
    if (cfg.input.is_relative()) cfg.input = base_dir / cfg.input;
    if (!std::filesystem::exists(cfg.input)) throw DataError("input file " + cfg.input.string() + " does not exist");

    if (j.contains("discount_curve")) {
      if (cfg.engine != Engine::tree) throw DataError("discount_curve applies to the tree engine only");
      cfg.discount_curve = j.at("discount_curve").get<std::vector<double>>();
    }
    if (!j.contains("risk_measure")) throw DataError("config: missing field 'risk_measure'");
    cfg.spec = risk_measure_from_json(j.at("risk_measure"));

    if (j.contains("replication")) {
      const json& r = j.at("replication");
      cfg.criterion = parse_criterion(r.value("criterion", "none"));
      const std::string measure = r.value("measure", "P");
      if (measure != "P" && measure != "Q") throw DataError("replication.measure must be P or Q");
      cfg.measure = measure == "P" ? Measure::P : Measure::Q;
      if (cfg.criterion == Criterion::fixed) {
        if (!r.contains("weights")) throw DataError("criterion fixed needs replication.weights");
        auto w = r.at("weights").get<std::vector<double>>();
        cfg.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      }
    }
    if (j.contains("output_dir")) {
      cfg.output_dir = j.at("output_dir").get<std::string>();
      if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.threads = j.value("threads", 1u);
    cfg.strict = j.value("strict", false);
    if (j.contains("verification")) {
      const json& v = j.at("verification");
      cfg.verification.cross_checks = v.value("cross_checks", true);
      cfg.verification.guard = v.value("guard", kEnumerationGuard);
      cfg.verification.mc_samples = v.value("mc_samples", cfg.verification.mc_samples);
      cfg.verification.suite_trees = v.value("suite_trees", cfg.verification.suite_trees);
      cfg.verification.suite_models = v.value("suite_models", cfg.verification.suite_models);
      if (cfg.verification.guard > kEnumerationGuard) {
        throw DataError("verification.guard may not exceed " + std::to_string(kEnumerationGuard));
      }
      if (cfg.verification.mc_samples < 2) throw DataError("verification.mc_samples must be at least 2");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path), path.has_parent_path() ? path.parent_path() : ".");
}

void apply(RunConfig& config, const Overrides& o) {
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.seed) config.seed = *o.seed;
  if (o.threads) config.threads = *o.threads;
  if (o.strict) config.strict = true;
}

std::string config_hash(const RunConfig& config) {
  json doc = config.source;
  doc.erase("output_dir");
  doc.erase("threads");
  doc["seed"] = config.seed;
  doc["strict"] = config.strict;
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Outcome run(const RunConfig& cfg) {
  set_worker_count(cfg.threads);
  ojson report = header(cfg, "run");
  Outcome outcome;
  switch (cfg.engine) {
    case Engine::tree: outcome = run_tree(cfg, report); break;
    case Engine::gaussian: outcome = run_gaussian(cfg, report); break;
    case Engine::iid: outcome = run_iid(cfg, report); break;
  }
  finish(cfg, outcome, report, "valuation.json");
  return outcome;
}

Outcome verify(const RunConfig& cfg) {
  set_worker_count(cfg.threads);
  ojson report = header(cfg, "verify");
  Outcome outcome;
  std::vector<Suite> suites;

  // The configured input is validated first; its own cross-check respects the guard.
  if (cfg.engine == Engine::tree) {
    TreeInput in = load_tree_csv(cfg.input, cfg.discount_curve);
    require_valid(in.tree);
    check_cashflows(in.tree, in.flows);
    Suite s{"input_tree_recursion_vs_enumeration"};
    const NodeValues residual = in.flows.liability;
    auto res = backward_valuation(in.tree, residual, cfg.spec);
    auto e = enumerate_optimal_stopping(in.tree, in.tree.root(), res.r, residual, cfg.verification.guard);
    s.max_deviation = std::max(deviation(res.v0(), e.policyholder_inf), deviation(res.c0(), e.owner_sup));
    s.cases = 1;
    suites.push_back(s);
  } else if (cfg.engine == Engine::gaussian) {
    const auto model = gaussian_model_from_json(read_json_file(cfg.input));
    Eigen::VectorXd g = Eigen::VectorXd::Unit(model.dimension(), 0);
    const auto exposure = constant_exposure(model, g);
    const double base = r0(cfg.spec);
    auto val = gaussian_valuation(model, exposure, base);
    auto mc = gaussian_mc(model, exposure, base, val, cfg.verification.mc_samples, cfg.seed);
    Suite s{"input_gaussian_vs_monte_carlo"};
    s.max_deviation = mc.stderr_ > 0.0 ? std::abs(mc.v0 - val.v0()) / mc.stderr_ : 0.0;
    s.tolerance = kMcStandardErrors;
    s.cases = 1;
    suites.push_back(s);
  } else {
    (void)iid_from_json(read_json_file(cfg.input));
  }
  suites.push_back(recursion_vs_enumeration(cfg));
  suites.push_back(gaussian_vs_iid(cfg));
  suites.push_back(terminal_value_vs_least_squares(cfg));

  ojson list = ojson::array();
  bool all = true;
  for (const auto& s : suites) {
    list.push_back({{"name", s.name}, {"passed", s.passed()}, {"cases", s.cases},
                    {"max_deviation", s.max_deviation}, {"tolerance", s.tolerance}});
    all = all && s.passed();
  }
  report["suites"] = list;
  report["passed"] = all;
  finish(cfg, outcome, report, "verification.json");
  outcome.exit_code = all ? 0 : 1;
  return outcome;
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const DegeneracyError*>(&e)) return 3;
  if (dynamic_cast<const GuardError*>(&e)) return 4;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const StructuralError*>(&e) || dynamic_cast<const ModelError*>(&e) ||
      dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    return 2;
  }
  return 1;
}

std::string error_json(const std::exception& e) {
  ojson err = {{"kind", "error"}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
  if (const auto* le = dynamic_cast<const Error*>(&e)) err["kind"] = le->kind();
  ojson details = ojson::array();
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) details = v->details();
  if (const auto* d = dynamic_cast<const DegeneracyError*>(&e)) details = d->details();
  err["details"] = details;
  return ojson{{"error", err}}.dump() + "\n";
}

}  // namespace liabval::app
