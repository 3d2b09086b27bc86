#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = LIABVAL_FIXTURES_DIR;
const fs::path kScratch = LIABVAL_SCRATCH_DIR;

struct CliResult {
  int exit_code;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliResult cli(const std::string& args) {
  fs::create_directories(kScratch);
  const fs::path err = kScratch / "stderr.txt";
  std::string cmd = std::string("\"") + LIABVAL_BINARY + "\" " + args + " > /dev/null 2> \"" +
                    err.string() + "\"";
  int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string run_args(const std::string& config, const fs::path& out) {
  fs::remove_all(out);
  return "run --config \"" + (kFixtures / config).string() + "\" --output-dir \"" + out.string() + "\"";
}

}  // namespace

TEST_CASE("zero flows value to zero", "[cli]") {
  auto out = kScratch / "zero";
  auto r = cli(run_args("zero_flows.json", out));
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(slurp(out / "valuation.json"));
  for (const char* key : {"V0", "C0", "R0", "L0"}) CHECK(j["summary"][key].get<double>() == 0.0);
}

TEST_CASE("risk-free instrument is refused with a degeneracy report", "[cli]") {
  auto r = cli(run_args("risk_free_instrument.json", kScratch / "risk_free"));
  CHECK(r.exit_code == 3);
  auto j = json::parse(r.err);
  CHECK(j["error"]["kind"] == "degeneracy");
  CHECK_FALSE(j["error"]["details"].empty());
}

TEST_CASE("corrupted density is a validation error", "[cli]") {
  auto r = cli(run_args("corrupted_density.json", kScratch / "corrupted"));
  CHECK(r.exit_code == 2);
  auto j = json::parse(r.err);
  CHECK(j["error"]["kind"] == "validation");
  CHECK(r.err.find("ab") != std::string::npos);
}

TEST_CASE("enumeration guard breach exits with 4", "[cli]") {
  // Binary tree of horizon 4: 30 non-root nodes, above the guard of 24.
  const fs::path dir = kScratch / "guard";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "tree.csv");
    csv << "node_id,parent_id,time,branch_prob,density,x_o\nn,,0,1,1,\n";
    std::vector<std::string> layer{"n"};
    for (int t = 1; t <= 4; ++t) {
      std::vector<std::string> next;
      for (const auto& p : layer) {
        for (const char* side : {"u", "d"}) {
          next.push_back(p + side);
          csv << next.back() << "," << p << "," << t << ",0.5,1," << (side[0] == 'u' ? 1 : -1) << "\n";
        }
      }
      layer = next;
    }
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"engine": "tree", "input": "tree.csv", "risk_measure": {"kind": "es", "u": 0.1}})";
  }
  auto r = cli("run --config \"" + (dir / "config.json").string() + "\" --output-dir \"" +
               (dir / "out").string() + "\"");
  CHECK(r.exit_code == 4);
  CHECK(json::parse(r.err)["error"]["kind"] == "guard");

  // Without cross-checks the same tree values fine.
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"engine": "tree", "input": "tree.csv", "risk_measure": {"kind": "es", "u": 0.1},
               "verification": {"cross_checks": false}})";
  }
  r = cli("run --config \"" + (dir / "config.json").string() + "\" --output-dir \"" +
          (dir / "out").string() + "\"");
  CHECK(r.exit_code == 0);
}

TEST_CASE("verify writes a passing verification report", "[cli]") {
  auto out = kScratch / "verify";
  fs::remove_all(out);
  auto r = cli("verify --config \"" + (kFixtures / "two_leaf_var40.json").string() +
               "\" --output-dir \"" + out.string() + "\"");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(slurp(out / "verification.json"));
  CHECK(j.dump().find("\"passed\":false") == std::string::npos);
}

TEST_CASE("argument errors exit with 2 and a JSON error", "[cli]") {
  auto r = cli("run --config \"" + (kScratch / "missing.json").string() + "\"");
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err)["error"]["exit_code"] == 2);
  CHECK(cli("frobnicate").exit_code == 2);
}

TEST_CASE("seed override changes the config hash only through the seed", "[cli]") {
  auto a = kScratch / "seed_a", b = kScratch / "seed_b", c = kScratch / "seed_c";
  REQUIRE(cli(run_args("two_leaf_var40.json", a)).exit_code == 0);
  REQUIRE(cli(run_args("two_leaf_var40.json", b) + " --seed 8").exit_code == 0);
  REQUIRE(cli(run_args("two_leaf_var40.json", c) + " --seed 7").exit_code == 0);
  auto ja = json::parse(slurp(a / "valuation.json"));
  auto jb = json::parse(slurp(b / "valuation.json"));
  auto jc = json::parse(slurp(c / "valuation.json"));
  CHECK(ja["config_hash"] != jb["config_hash"]);
  CHECK(ja["config_hash"] == jc["config_hash"]);
  CHECK(ja["summary"] == jb["summary"]);
}
