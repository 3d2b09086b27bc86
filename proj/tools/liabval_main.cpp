#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "liabval/app.hpp"
#include "liabval/errors.hpp"

namespace {

int dispatch(const std::string& command, const std::string& config_path, const liabval::app::Overrides& overrides) {
  try {
    auto config = liabval::app::load_config(config_path);
    liabval::app::apply(config, overrides);
    auto outcome = command == "run" ? liabval::app::run(config) : liabval::app::verify(config);
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : outcome.files) std::cout << f.string() << "\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << liabval::app::error_json(e);
    return liabval::app::exit_code_for(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Market-consistent liability valuation under repeated capital requirements"};
  app.require_subcommand(1);

  std::string config_path;
  liabval::app::Overrides overrides;
  std::string output_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "Directory for reports (overrides the config)");
    sub->add_option("--seed", seed, "Seed for randomized components (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads for layer-parallel loops")->check(CLI::Range(1u, 256u));
    sub->add_flag("--strict", overrides.strict, "Treat warnings as errors");
  };
  auto* run = app.add_subcommand("run", "Value the configured liability and write the report");
  auto* verify = app.add_subcommand("verify", "Run the oracle cross-check suites");
  add_common(run);
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const liabval::ArgumentError err(e.what());
    std::cerr << liabval::app::error_json(err);
    return liabval::app::exit_code_for(err);
  }
  auto* sub = run->parsed() ? run : verify;
  if (sub->count("--output-dir")) overrides.output_dir = output_dir;
  if (sub->count("--seed")) overrides.seed = seed;
  if (sub->count("--threads")) overrides.threads = threads;
  return dispatch(run->parsed() ? "run" : "verify", config_path, overrides);
}
