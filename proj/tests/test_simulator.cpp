#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bandit/config_json.hpp"
#include "bandit/errors.hpp"
#include "bandit/pipeline.hpp"
#include "bandit/policies/mab.hpp"
#include "bandit/policy.hpp"
#include "bandit/policy_codec.hpp"
#include "bandit/simulator.hpp"
#include "bandit/store.hpp"
#include "helpers.hpp"

using namespace bandit;

namespace {

template <typename F>
Errc thrown_code(F&& f) {
  try {
    f();
  } catch (const BanditError& e) {
    return e.code();
  }
  return Errc::IoError;  // sentinel: nothing thrown
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("environment json round trips canonically for every kind") {
  const std::vector<std::string> docs = {
      R"({"kind":"bernoulli","means":[0.5,0.4,0.1]})",
      R"({"kind":"linear","weights":[[1.0,0.5],[0.0,-0.5]],"noise":0.1})",
      R"({"kind":"logistic","weights":[[2.0],[-2.0]]})",
      R"({"kind":"cascade","attractions":[0.8,0.6,0.4],"delay":{"kind":"fixed","steps":3}})",
      R"({"kind":"multi","weights":[[[0.9],[0.1]],[[0.2],[0.7]]],"noise":0.05,
          "delay":{"kind":"geometric","mean_steps":50}})",
  };
  for (const std::string& text : docs) {
    Environment env = environment_from_json(text);
    const std::string once = environment_to_json(env);
    const std::string twice = environment_to_json(environment_from_json(once));
    CHECK(once == twice);
  }

  Environment env = environment_from_json(
      R"({"kind":"multi","weights":[[[0.9],[0.1]],[[0.2],[0.7]]],
          "delay":{"kind":"geometric","mean_steps":50}})");
  CHECK(environment_arms(env) == 2);
  CHECK(env.delay.kind == DelayModel::Kind::Geometric);
  CHECK(env.delay.mean_steps == 50.0);

  CHECK(environment_arms(environment_from_json(R"({"kind":"bernoulli","means":[0.5]})")) == 1);
  CHECK(environment_arms(environment_from_json(
            R"({"kind":"cascade","attractions":[0.8,0.6,0.4]})")) == 3);
}

TEST_CASE("environment documents are validated on the way in") {
  auto code_of = [](const std::string& text) {
    return thrown_code([&] { environment_from_json(text); });
  };
  CHECK(code_of("{broken") == Errc::MalformedRecord);
  CHECK(code_of("[1,2]") == Errc::SchemaViolation);
  CHECK(code_of(R"({"kind":"martian"})") == Errc::SchemaViolation);
  CHECK(code_of(R"({"kind":"bernoulli","means":[]})") == Errc::EmptyArmSet);
  CHECK(code_of(R"({"kind":"bernoulli","means":[1.5]})") == Errc::OutOfRange);
  CHECK(code_of(R"({"kind":"bernoulli","means":["high"]})") == Errc::SchemaViolation);
  CHECK(code_of(R"({"kind":"cascade","attractions":[-0.1,0.5]})") == Errc::OutOfRange);
  CHECK(code_of(R"({"kind":"linear","weights":[[1.0]],"noise":-1})") == Errc::OutOfRange);
  CHECK(code_of(R"({"kind":"multi","weights":[[[1.0],[2.0]],[[1.0]]]})") == Errc::LengthMismatch);
  CHECK(code_of(R"({"kind":"bernoulli","means":[0.5],
                    "delay":{"kind":"weird"}})") == Errc::SchemaViolation);
  CHECK(code_of(R"({"kind":"bernoulli","means":[0.5],
                    "delay":{"kind":"fixed","steps":-5}})") == Errc::OutOfRange);
}

TEST_CASE("runs reject specs that do not line up") {
  ScopedDir dir("sim");
  SimulationSpec spec;
  spec.config = tabular_config("bad", 2, Algorithm::ThompsonBernoulli);
  spec.env.model = BernoulliArms{{0.5, 0.4}};
  spec.horizon = 10;

  SimulationSpec zero = spec;
  zero.horizon = 0;
  CHECK(thrown_code([&] { run_experiment(dir.path() + "/a", zero); }) == Errc::OutOfRange);

  SimulationSpec extra = spec;
  extra.env.model = BernoulliArms{{0.5, 0.4, 0.3}};
  CHECK(thrown_code([&] { run_experiment(dir.path() + "/b", extra); }) == Errc::LengthMismatch);

  // A ranking environment needs the ranking policy, and vice versa.
  SimulationSpec casc = spec;
  casc.env.model = CascadeClicks{{0.5, 0.4}};
  CHECK(thrown_code([&] { run_experiment(dir.path() + "/c", casc); }) == Errc::InvalidConfig);

  // Bernoulli feedback against a continuous-reward config.
  SimulationSpec kind = spec;
  kind.config = tabular_config("bad", 2, Algorithm::EpsilonGreedy);  // Continuous reward
  CHECK(thrown_code([&] { run_experiment(dir.path() + "/d", kind); }) == Errc::InvalidConfig);
}

TEST_CASE("equal specs produce byte-identical reports in different directories") {
  SimulationSpec spec;
  spec.config = tabular_config("det", 2, Algorithm::ThompsonBernoulli);
  spec.env.model = BernoulliArms{{0.8, 0.3}};
  spec.horizon = 500;
  spec.seed = 42;
  spec.flush = FlushPolicy{5, 4000};

  ScopedDir d1("sim_a"), d2("sim_b");
  const RunReport r1 = run_experiment(d1.path() + "/run", spec);
  const RunReport r2 = run_experiment(d2.path() + "/run", spec);
  CHECK(report_to_json(r1) == report_to_json(r2));

  // The run left a real store and logs behind.
  CHECK(std::filesystem::exists(d1.path() + "/run/store"));
  CHECK(std::filesystem::exists(d1.path() + "/run/logs"));
}

TEST_CASE("the closed loop learns a separated bernoulli instance") {
  SimulationSpec spec;
  spec.config = tabular_config("learn", 2, Algorithm::ThompsonBernoulli);
  spec.env.model = BernoulliArms{{0.9, 0.1}};
  spec.horizon = 2000;
  spec.seed = 7;
  spec.flush = FlushPolicy{5, 4000};

  ScopedDir dir("sim");
  const RunReport report = run_experiment(dir.path() + "/run", spec);

  CHECK(report.pipeline.impressions == 2000);
  CHECK(report.pipeline.impressions == report.pipeline.examples + report.pipeline.expired_dropped);
  CHECK(report.final_train_seq >= 1);
  CHECK(report.final_param_version == report.final_train_seq + 1);
  CHECK(report.trainer.applied_batches == report.final_train_seq);

  // Regret only accumulates, and the curve ends at the horizon.
  REQUIRE(!report.curve_steps.empty());
  CHECK(report.curve_steps.back() == 2000);
  CHECK(report.curve_regret.size() == report.curve_steps.size());
  for (std::size_t i = 1; i < report.curve_regret.size(); ++i) {
    CHECK(report.curve_regret[i] >= report.curve_regret[i - 1]);
  }

  // Pull fractions: 20 windows of 100 steps, each row a distribution.
  CHECK(report.pull_window == 100);
  CHECK(report.pull_fractions.size() == 20);
  for (const auto& row : report.pull_fractions) {
    REQUIRE(row.size() == 2);
    CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(report.pull_fractions.back()[0] > 0.8);

  // Fixed seed, so these are regression thresholds rather than gambles.
  CHECK(report.oracle_match_final > 0.8);
  CHECK(report.convergence_step >= 0);
  CHECK(report.convergence_step < 2000);
}

TEST_CASE("latency measurement buckets every decision") {
  SimulationSpec spec;
  spec.config = tabular_config("lat", 2, Algorithm::ThompsonBernoulli);
  spec.env.model = BernoulliArms{{0.6, 0.4}};
  spec.horizon = 200;
  spec.seed = 3;
  spec.flush = FlushPolicy{50, 60'000};
  spec.measure_latency = true;

  ScopedDir dir("sim");
  const RunReport report = run_experiment(dir.path() + "/run", spec);
  REQUIRE(report.measured_latency);
  REQUIRE(report.latency_us_histogram.size() == 18);
  int64_t total = 0;
  for (int64_t c : report.latency_us_histogram) total += c;
  CHECK(total == 200);
}

TEST_CASE("rewards past the attribution window default instead of matching") {
  SimulationSpec spec;
  spec.config = tabular_config("late", 2, Algorithm::ThompsonBernoulli);
  spec.config.attribution_window = std::chrono::seconds(5);
  spec.env.model = BernoulliArms{{0.7, 0.6}};
  spec.env.delay = DelayModel{DelayModel::Kind::Fixed, 10, 0.0};
  spec.horizon = 200;
  spec.seed = 11;
  spec.flush = FlushPolicy{20, 8000};

  ScopedDir dir("sim");
  const RunReport report = run_experiment(dir.path() + "/run", spec);
  CHECK(report.pipeline.impressions == 200);
  CHECK(report.pipeline.examples == 200);  // binary feedback defaults to 0
  CHECK(report.pipeline.expired_defaulted == 200);
  CHECK(report.pipeline.matched == 0);
  CHECK(report.pipeline.rewards > 0);
  CHECK(report.pipeline.discarded_rewards == report.pipeline.rewards);
}

TEST_CASE("a ranking run settles on the most attractive items") {
  SimulationSpec spec;
  spec.config = cascade_config("casc", 5, 2);
  spec.env.model = CascadeClicks{{0.9, 0.7, 0.1, 0.05, 0.02}};
  spec.horizon = 800;
  spec.seed = 5;
  spec.flush = FlushPolicy{10, 5000};

  ScopedDir dir("sim");
  const RunReport report = run_experiment(dir.path() + "/run", spec);
  CHECK(report.pipeline.impressions == 800);
  CHECK(report.final_train_seq >= 1);
  CHECK(report.oracle_match_final > 0.5);
  for (const auto& row : report.pull_fractions) {
    double sum = 0;
    for (double f : row) sum += f;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("a multi-objective run trains every objective") {
  SimulationSpec spec;
  spec.config = ggi_config("ggi", 3, 2);
  MultiObjectiveLinear env;
  env.weights = {{{0.8}, {0.5}, {0.2}}, {{0.1}, {0.6}, {0.3}}};
  env.noise = 0.05;
  spec.env.model = env;
  spec.env.delay = DelayModel{DelayModel::Kind::Fixed, 1, 0.0};
  spec.horizon = 600;
  spec.seed = 13;
  spec.flush = FlushPolicy{10, 5000};

  ScopedDir dir("sim");
  const RunReport report = run_experiment(dir.path() + "/run", spec);
  CHECK(report.pipeline.impressions == 600);
  CHECK(report.pipeline.impressions == report.pipeline.examples + report.pipeline.expired_dropped);
  CHECK(report.final_train_seq >= 1);
  // Arm 1 wins under the fairness scalarization (locked by the fixed seed).
  CHECK(report.oracle_match_final > 0.5);
}

TEST_CASE("a contextual run makes it around the full loop") {
  SimulationSpec spec;
  spec.config = linear_config("lin", 3, Algorithm::LinearTS, RewardSpec::Kind::Binary);
  LogisticContext env;
  env.weights = {{-2.0, 4.0, 0.0}, {2.0, -4.0, 0.0}, {-3.0, 0.0, 0.0}};
  spec.env.model = env;
  spec.horizon = 400;
  spec.seed = 17;
  spec.flush = FlushPolicy{20, 10'000};

  ScopedDir dir("sim");
  const RunReport report = run_experiment(dir.path() + "/run", spec);
  CHECK(report.pipeline.impressions == 400);
  CHECK(report.pipeline.impressions == report.pipeline.examples + report.pipeline.expired_dropped);
  CHECK(report.final_train_seq >= 1);
  CHECK(report.sampler.samples == 400);
}

TEST_CASE("the side-by-side comparison needs a frozen bandit and finds the uplift") {
  ScopedDir dir("sim");
  SimClock clock(1000);
  BanditStore store(dir.path() + "/store", StoreOptions{false, 1024}, &clock);
  BanditConfig config = tabular_config("ab", 2, Algorithm::ThompsonBernoulli);
  store.put_config(config);

  Environment env;
  env.model = BernoulliArms{{0.9, 0.1}};

  CHECK(thrown_code([&] { freeze_and_ab(store, "ab", env, "a1", 100, 1); }) == Errc::NotFrozen);

  // Install a posterior that has already converged on arm 0, then freeze.
  PolicyState ps;
  ps.update_batches = 1;
  BetaState beta = make_beta(2);
  beta.alpha = {400.0, 1.0};
  beta.beta = {4.0, 400.0};
  ps.state = beta;
  const CasOutcome out = store.cas_put_params("ab", 1, encode_policy(config, ps), 1);
  REQUIRE(out.committed);
  store.freeze("ab");

  const ABReport report = freeze_and_ab(store, "ab", env, "a1", 20'000, 99);
  CHECK(report.bandit_id == "ab");
  CHECK(report.control_arm == "a1");
  CHECK(report.n_per_side == 20'000);
  CHECK(std::abs(report.treatment_mean - 0.9) < 0.02);
  CHECK(std::abs(report.control_mean - 0.1) < 0.02);
  CHECK(std::abs(report.uplift - 0.8) < 0.02);
  CHECK(report.ci_low > 0.5);
  CHECK(report.ci_high < 1.0);
  CHECK(report.ci_low < report.uplift);
  CHECK(report.uplift < report.ci_high);

  CHECK(thrown_code([&] { freeze_and_ab(store, "ab", env, "zz", 10, 1); }) == Errc::UnknownArm);
  CHECK(thrown_code([&] { freeze_and_ab(store, "ab", env, "a1", 0, 1); }) == Errc::OutOfRange);
}

TEST_CASE("sweep specs parse grids, seeds, and flush settings") {
  SweepSpec spec = sweep_spec_from_json(R"({
    "config": {"bandit_id": "sw", "algorithm": "EpsilonGreedy",
               "arm_space": {"explicit": ["a0", "a1"]}},
    "env": {"kind": "bernoulli", "means": [0.8, 0.2]},
    "horizon": 300,
    "seeds": 2,
    "flush": {"max_examples": 10, "max_wait_ms": 5000},
    "grid": {"hyperparameters.epsilon": [0.1, 0.4]},
    "svg": true
  })");
  CHECK(spec.horizon == 300);
  CHECK(spec.seeds == std::vector<uint64_t>{1, 2});
  CHECK(spec.flush.max_examples == 10);
  CHECK(spec.flush.max_wait_ms == 5000);
  REQUIRE(spec.grid.size() == 1);
  CHECK(spec.grid[0].first == "hyperparameters.epsilon");
  CHECK(spec.grid[0].second == std::vector<std::string>{"0.1", "0.4"});
  CHECK(spec.emit_svg);

  SweepSpec listed = sweep_spec_from_json(R"({
    "config": {"bandit_id": "sw", "algorithm": "EpsilonGreedy",
               "arm_space": {"explicit": ["a0", "a1"]}},
    "env": {"kind": "bernoulli", "means": [0.8, 0.2]},
    "horizon": 100,
    "seeds": [7, 9]
  })");
  CHECK(listed.seeds == std::vector<uint64_t>{7, 9});
  CHECK(listed.grid.empty());
  CHECK_FALSE(listed.emit_svg);

  auto code_of = [](const std::string& text) {
    return thrown_code([&] { sweep_spec_from_json(text); });
  };
  CHECK(code_of("{}") == Errc::SchemaViolation);
  CHECK(code_of("{nope") == Errc::MalformedRecord);
  CHECK(code_of(R"({"config": {}, "env": {}, "horizon": 10,
                    "grid": {"hyperparameters.epsilon": []}})") == Errc::SchemaViolation);
}

TEST_CASE("a sweep runs the whole grid and writes its artifacts") {
  SweepSpec spec = sweep_spec_from_json(R"({
    "config": {"bandit_id": "sw", "algorithm": "EpsilonGreedy",
               "arm_space": {"explicit": ["a0", "a1"]}},
    "env": {"kind": "bernoulli", "means": [0.8, 0.2]},
    "horizon": 150,
    "seeds": 2,
    "flush": {"max_examples": 10, "max_wait_ms": 5000},
    "grid": {"hyperparameters.epsilon": [0.1, 0.4]},
    "svg": true
  })");

  ScopedDir dir("sim");
  const std::string out = dir.path() + "/sweep";
  const SweepResult result = run_sweep(out, spec);

  REQUIRE(result.rows.size() == 4);
  REQUIRE(result.report_files.size() == 4);
  for (const auto& f : result.report_files) {
    CHECK(std::filesystem::exists(out + "/" + f));
  }
  CHECK(result.report_files[0] == "report-hyperparameters.epsilon=0.1-seed1.json");

  int low = 0, high = 0;
  for (const auto& row : result.rows) {
    const std::string eps = row.params.at("hyperparameters.epsilon");
    if (eps == "0.1") low += 1;
    if (eps == "0.4") high += 1;
    CHECK(std::filesystem::exists(out + "/" + row.report_file));
  }
  CHECK(low == 2);
  CHECK(high == 2);

  const std::string csv = slurp(result.csv_file);
  CHECK(csv.rfind("hyperparameters.epsilon,final_regret,oracle_match_final,"
                  "convergence_step,seed,report\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  REQUIRE(!result.svg_file.empty());
  const std::string svg = slurp(result.svg_file);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("epsilon=0.1") != std::string::npos);
  CHECK(svg.find("epsilon=0.4") != std::string::npos);
}
