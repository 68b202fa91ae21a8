#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lilab/cli.hpp"
#include "lilab/config.hpp"
#include "lilab/report.hpp"

using namespace lilab;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = LILAB_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lilab_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(LILAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip") {
  for (const char* name : {"smoke.json", "lil.json", "check_linear.json", "check_circulant.json", "chain_mixing.json",
                           "doubling.json"}) {
    const auto c = load_config(kConfigs / name);
    const auto j = config_to_json(c);
    const auto back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(config_hash(back) == config_hash(c));
  }
}

TEST_CASE("config schema errors") {
  auto j = config_to_json(load_config(kConfigs / "smoke.json"));
  j["unexpected"] = 1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j.erase("unexpected");
  j["statistics"][0]["bogus"] = true;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = config_to_json(load_config(kConfigs / "smoke.json"));
  j["model"]["family"] = "nope";
  CHECK_THROWS(config_from_json(j));
  j = config_to_json(load_config(kConfigs / "smoke.json"));
  j["n_grid"] = {100, 10};
  CHECK_THROWS(config_from_json(j));
}

TEST_CASE("config hash ignores workers and output") {
  auto c = load_config(kConfigs / "smoke.json");
  const auto h = config_hash(c);
  c.workers = 8;
  c.output = "elsewhere";
  CHECK(config_hash(c) == h);
  c.seed += 1;
  CHECK(config_hash(c) != h);
}

TEST_CASE("workers resolution") {
  CHECK(resolve_workers(3u, 1) == 3);
  ::setenv("LILAB_WORKERS", "5", 1);
  CHECK(resolve_workers(std::nullopt, 1) == 5);
  ::setenv("LILAB_WORKERS", "x", 1);
  CHECK_THROWS(resolve_workers(std::nullopt, 1));
  ::unsetenv("LILAB_WORKERS");
  CHECK(resolve_workers(std::nullopt, 2) == 2);
}

TEST_CASE("check command") {
  std::ostringstream out, err;
  CliOptions opt;
  opt.config = kConfigs / "check_linear.json";
  opt.out = scratch("linear");
  CHECK(cmd_check(opt, out, err) == kExitPass);
  const std::string csv = slurp(*opt.out / "conditions.csv");
  CHECK(csv.rfind("condition,n,term,partial_sum,tail_bound,verdict\n", 0) == 0);
  CHECK(csv.find("hannan_value=1.5") != std::string::npos);
  CHECK(fs::exists(*opt.out / "manifest.json"));

  opt.config = kConfigs / "check_circulant.json";
  opt.out = scratch("circulant");
  CHECK(cmd_check(opt, out, err) == kExitFail);

  // No checks requested: nothing to violate.
  auto c = load_config(kConfigs / "check_linear.json");
  c.checks.clear();
  const auto dir = scratch("empty");
  {
    std::ofstream f(dir / "empty.json");
    f << config_to_json(c).dump(2);
  }
  opt.config = dir / "empty.json";
  opt.out = dir / "out";
  CHECK(cmd_check(opt, out, err) == kExitPass);

  opt.config = dir / "missing.json";
  CHECK(cmd_check(opt, out, err) == kExitUsage);
}

TEST_CASE("simulate command writes declared files only") {
  std::ostringstream out, err;
  CliOptions opt;
  opt.config = kConfigs / "smoke.json";
  opt.out = scratch("smoke");
  opt.workers = 2;
  REQUIRE(cmd_simulate(opt, out, err) == kExitPass);
  const auto manifest = nlohmann::json::parse(slurp(*opt.out / "manifest.json"));
  std::set<std::string> declared;
  for (const auto& f : manifest.at("files")) declared.insert(f.get<std::string>());
  std::set<std::string> written;
  for (const auto& e : fs::directory_iterator(*opt.out)) written.insert(e.path().filename().string());
  CHECK(declared == written);
  CHECK(written.size() >= 2);
  CHECK(manifest.at("seed") == 20240612);
  CHECK(manifest.at("version") == kVersion);
  CHECK(manifest.contains("config_hash"));

  // Rerun: count and maximum outputs are byte-identical.
  CliOptions again = opt;
  again.out = scratch("smoke2");
  again.workers = 1;
  REQUIRE(cmd_simulate(again, out, err) == kExitPass);
  for (const char* f : {"counts.csv", "maxima.csv", "histograms.csv"})
    CHECK(slurp(*opt.out / f) == slurp(*again.out / f));

  CHECK(slurp(*opt.out / "reports.csv").find("lil,") != std::string::npos);
  // CSV conventions: LF endings, '.' decimals.
  CHECK(slurp(*opt.out / "reports.csv").find('\r') == std::string::npos);
}

TEST_CASE("simulate command error codes") {
  std::ostringstream out, err;
  const auto dir = scratch("bad");
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"name": "x", "model": {"family": "linear"}, "n_grid": [8]})";
  }
  CliOptions opt;
  opt.config = dir / "bad.json";
  CHECK(cmd_simulate(opt, out, err) == kExitUsage);
  auto c = load_config(kConfigs / "smoke.json");
  c.memory_budget = 16;
  {
    std::ofstream f(dir / "budget.json");
    f << config_to_json(c).dump();
  }
  opt.config = dir / "budget.json";
  opt.out = dir / "out";
  CHECK(cmd_simulate(opt, out, err) == kExitRuntime);
}

TEST_CASE("verify command") {
  std::ostringstream out, err;
  CliOptions opt;
  opt.suite = "trivial";
  opt.out = scratch("verify");
  CHECK(cmd_verify(opt, out, err) == kExitPass);
  CHECK(out.str().find("PASS") != std::string::npos);
  opt.suite = "no-such-suite";
  CHECK(cmd_verify(opt, out, err) == kExitUsage);
}

TEST_CASE("executable exit codes") {
  const auto dir = scratch("binary");
  CHECK(run_binary("verify --suite no-such-suite") == 2);
  CHECK(run_binary("--no-such-flag") == 2);
  CHECK(run_binary("check --config " + (kConfigs / "check_linear.json").string() + " --out " + (dir / "a").string()) == 0);
  CHECK(run_binary("check --config " + (kConfigs / "check_circulant.json").string() + " --out " + (dir / "b").string()) == 1);
  CHECK(run_binary("simulate --config " + (dir / "missing.json").string()) == 2);
}
