#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "helpers.hpp"

using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

// Runs the installed binary through the shell, capturing both streams.
CmdResult run_cli(const std::string& args, const std::string& scratch) {
  const char* bin = std::getenv("BANDITCTL_PATH");
  REQUIRE_MESSAGE(bin != nullptr, "BANDITCTL_PATH must point at the banditctl binary");
  const std::string out_file = scratch + "/cmd.out";
  const std::string err_file = scratch + "/cmd.err";
  const std::string cmd =
      std::string(bin) + " " + args + " > " + out_file + " 2> " + err_file;
  const int status = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

const std::string kConfig = R"({
  "bandit_id": "cli",
  "algorithm": "ThompsonBernoulli",
  "arm_space": {"explicit": ["a0", "a1"]}
})";

}  // namespace

TEST_CASE("usage errors exit 1 and help exits 0") {
  ScopedDir dir("cli");
  CHECK(run_cli("", dir.path()).exit_code == 1);
  CHECK(run_cli("frobnicate", dir.path()).exit_code == 1);

  CmdResult help = run_cli("--help", dir.path());
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("serve") != std::string::npos);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(help.out.find("replay") != std::string::npos);

  // Required-option and option-check failures are parse errors, not crashes.
  CHECK(run_cli("create-bandit --data " + dir.path() + " --config " + dir.path() + "/nope.json",
                dir.path())
            .exit_code == 1);
  CHECK(run_cli("freeze --data " + dir.path(), dir.path()).exit_code == 1);
}

TEST_CASE("create, freeze, and inspect manage a bandit on disk") {
  ScopedDir dir("cli");
  const std::string data = dir.path() + "/data";
  write_file(dir.path() + "/config.json", kConfig);

  CmdResult created = run_cli("create-bandit --data " + data + " --config " + dir.path() +
                                  "/config.json",
                              dir.path());
  REQUIRE(created.exit_code == 0);
  json doc = json::parse(created.out);
  CHECK(doc["bandit_id"] == "cli");
  CHECK(doc["config_version"] == 1);
  CHECK(doc["param_version"] == 1);

  write_file(dir.path() + "/bad.json", "{nope");
  CmdResult bad = run_cli("create-bandit --data " + data + " --config " + dir.path() +
                              "/bad.json",
                          dir.path());
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("MalformedRecord") != std::string::npos);

  CmdResult frozen = run_cli("freeze --data " + data + " --bandit-id cli", dir.path());
  REQUIRE(frozen.exit_code == 0);
  doc = json::parse(frozen.out);
  CHECK(doc["status"] == "frozen");
  CHECK(doc["config_version"] == 2);

  CmdResult again = run_cli("freeze --data " + data + " --bandit-id cli", dir.path());
  CHECK(again.exit_code == 1);
  CHECK(again.err.find("AlreadyFrozen") != std::string::npos);

  CmdResult inspected = run_cli("inspect --data " + data + " --bandit-id cli", dir.path());
  REQUIRE(inspected.exit_code == 0);
  doc = json::parse(inspected.out);
  CHECK(doc["config_version"] == 2);
  CHECK(doc["param_version"] == 1);
  CHECK(doc["train_seq"] == 0);
  CHECK(doc["algorithm"] == "ThompsonBernoulli");
  CHECK(doc["logs"]["impressions"] == 0);
  CHECK(doc["logs"]["batches"] == 0);

  CmdResult ghost = run_cli("inspect --data " + data + " --bandit-id ghost", dir.path());
  CHECK(ghost.exit_code == 1);
  CHECK(ghost.err.find("UnknownBandit") != std::string::npos);
}

TEST_CASE("simulate leaves an auditable run that replay verifies") {
  ScopedDir dir("cli");
  const std::string out = dir.path() + "/run";
  write_file(dir.path() + "/config.json", R"({
    "bandit_id": "cli2",
    "algorithm": "ThompsonBernoulli",
    "arm_space": {"explicit": ["a0", "a1"]}
  })");
  write_file(dir.path() + "/env.json", R"({"kind": "bernoulli", "means": [0.8, 0.2]})");

  CmdResult sim = run_cli("simulate --config " + dir.path() + "/config.json --env " + dir.path() +
                              "/env.json --horizon 300 --seed 5 --out " + out + " --svg",
                          dir.path());
  REQUIRE_MESSAGE(sim.exit_code == 0, sim.err);
  json doc = json::parse(sim.out);
  CHECK(doc["bandit_id"] == "cli2");
  CHECK(doc["horizon"] == 300);
  CHECK(doc["seed"] == 5);
  CHECK(doc["applied_batches"].get<int64_t>() >= 1);
  CHECK(std::filesystem::exists(doc["report"].get<std::string>()));
  CHECK(std::filesystem::exists(out + "/reports/cli2-seed5.svg"));

  // The run directory is now taken; a rerun must not train on top of it.
  CmdResult rerun = run_cli("simulate --config " + dir.path() + "/config.json --env " +
                                dir.path() + "/env.json --horizon 300 --out " + out,
                            dir.path());
  CHECK(rerun.exit_code == 1);
  CHECK(rerun.err.find("already exists") != std::string::npos);

  CmdResult inspected = run_cli("inspect --data " + out + " --bandit-id cli2", dir.path());
  REQUIRE(inspected.exit_code == 0);
  doc = json::parse(inspected.out);
  CHECK(doc["logs"]["impressions"] == 300);
  CHECK(doc["logs"]["batched_examples"] == 300);
  CHECK(doc["logs"]["batches"].get<int64_t>() >= 1);
  CHECK(doc["train_seq"].get<int64_t>() >= 1);

  // Same flush policy as the run: the derived batches match the log.
  CmdResult replay = run_cli("replay --data " + out + " --bandit-id cli2", dir.path());
  CHECK(replay.exit_code == 0);
  CHECK(replay.out.find("batches identical: true") != std::string::npos);

  // A different batching policy cannot reproduce the recorded stream.
  CmdResult skewed =
      run_cli("replay --data " + out + " --bandit-id cli2 --max-examples 7", dir.path());
  CHECK(skewed.exit_code == 2);
  CHECK(skewed.out.find("batches identical: false") != std::string::npos);
}

TEST_CASE("sweep writes the grid artifacts") {
  ScopedDir dir("cli");
  write_file(dir.path() + "/grid.json", R"({
    "config": {"bandit_id": "sw", "algorithm": "EpsilonGreedy",
               "arm_space": {"explicit": ["a0", "a1"]}},
    "env": {"kind": "bernoulli", "means": [0.8, 0.2]},
    "horizon": 120,
    "seeds": 1,
    "flush": {"max_examples": 10, "max_wait_ms": 5000},
    "grid": {"hyperparameters.epsilon": [0.1, 0.4]},
    "svg": true
  })");

  const std::string out = dir.path() + "/sweep";
  CmdResult swept = run_cli("sweep --grid " + dir.path() + "/grid.json --out " + out, dir.path());
  REQUIRE_MESSAGE(swept.exit_code == 0, swept.err);
  json doc = json::parse(swept.out);
  CHECK(doc["runs"] == 2);
  CHECK(std::filesystem::exists(doc["csv"].get<std::string>()));
  CHECK(std::filesystem::exists(doc["svg"].get<std::string>()));
}
