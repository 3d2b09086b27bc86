#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "liabval/risk_measure.hpp"
#include "liabval/scenario_tree.hpp"
#include "liabval/stopping.hpp"

namespace liabval::app {

enum class Engine { tree, gaussian, iid };

enum class Criterion { none, fixed, cashflow_l2root, cashflow_l2, terminal_value, min_expected_max_c };

const char* to_string(Criterion c) noexcept;

struct Verification {
  bool cross_checks = true;
  std::size_t guard = kEnumerationGuard;
  std::size_t mc_samples = 200000;
  std::size_t suite_trees = 50;
  std::size_t suite_models = 50;
};

struct RunConfig {
  Engine engine = Engine::tree;
  std::filesystem::path input;  // resolved against the config file's directory
  std::vector<double> discount_curve;
  RiskMeasureSpec spec = RiskMeasureSpec::expected_shortfall(0.01);
  Criterion criterion = Criterion::none;
  Measure measure = Measure::P;
  Eigen::VectorXd weights;  // for Criterion::fixed
  std::filesystem::path output_dir = "liabval-out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool strict = false;
  Verification verification;
  nlohmann::json source;  // the parsed config document, for hashing
};

// Throws DataError on schema violations.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool strict = false;
};
void apply(RunConfig& config, const Overrides& overrides);

// FNV-1a (64 bit) of the canonical config document with the effective seed
// and strictness; output_dir and threads do not affect results and are left out.
std::string config_hash(const RunConfig& config);

struct Outcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

// Writes valuation.json, nodes.csv (tree engine) and plot_series.csv into
// the output directory. Throws liabval::Error subclasses on failure.
Outcome run(const RunConfig& config);

// Runs the oracle suites and writes verification.json; exit code 1 when a
// suite fails.
Outcome verify(const RunConfig& config);

// 2 validation/data/config, 3 degeneracy refusal, 4 guard breach, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;
std::string error_json(const std::exception& e);

}  // namespace liabval::app
