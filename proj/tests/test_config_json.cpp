#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "bandit/config_json.hpp"
#include "bandit/errors.hpp"
#include "helpers.hpp"

using namespace bandit;

TEST_CASE("round trip is canonical for every family") {
  std::vector<BanditConfig> configs = {
      tabular_config("eg", 3, Algorithm::EpsilonGreedy),
      tabular_config("ts", 4, Algorithm::ThompsonBernoulli),
      tabular_config("e3", 2, Algorithm::Exp3),
      linear_config("lt", 3, Algorithm::LinearTS, RewardSpec::Kind::Binary),
      linear_config("le", 3, Algorithm::LinearEG, RewardSpec::Kind::Continuous),
      linear_config("li", 3, Algorithm::LinearIGW, RewardSpec::Kind::Continuous),
      cascade_config("ct", 5, 3),
      ggi_config("gg", 3, 2),
      slotted_config("sl", Algorithm::LinearTS, RewardSpec::Kind::Binary),
  };
  for (const BanditConfig& c : configs) {
    std::string text = config_to_json(c);
    BanditConfig back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.bandit_id == c.bandit_id);
    CHECK(back.algorithm == c.algorithm);
  }
}

TEST_CASE("frozen status survives the round trip") {
  BanditConfig c = tabular_config("fz", 2, Algorithm::ThompsonBernoulli);
  c.status = LifecycleStatus::Frozen;
  BanditConfig back = config_from_json(config_to_json(c));
  CHECK(back.frozen());
}

TEST_CASE("a minimal document picks up defaults") {
  std::string text = R"({
    "bandit_id": "minimal",
    "algorithm": "ThompsonBernoulli",
    "arm_space": {"explicit": ["a", "b"]}
  })";
  BanditConfig c = config_from_json(text);
  CHECK(c.hyperparameters.epsilon == 0.1);
  CHECK(c.hyperparameters.prior_variance == 1.0);
  CHECK(c.attribution_window.count() == 3600);
  CHECK(c.reward_spec.kind == RewardSpec::Kind::Binary);
  CHECK_FALSE(c.frozen());
  CHECK(c.context_schema.empty());
}

TEST_CASE("bad documents fail with the right code") {
  auto code_of = [](const std::string& text) {
    try {
      config_from_json(text);
      return Errc::IoError;  // not reached; sentinel that fails the check
    } catch (const BanditError& e) {
      return e.code();
    }
  };
  CHECK(code_of("{nope") == Errc::MalformedRecord);
  CHECK(code_of("[1,2]") == Errc::SchemaViolation);
  // Unknown keys are rejected rather than silently dropped.
  CHECK(code_of(R"({"bandit_id":"x","algorithm":"Exp3",
                    "arm_space":{"explicit":["a","b"]},"surprise":1})") == Errc::SchemaViolation);
  CHECK(code_of(R"({"bandit_id":"x","algorithm":"Exp3",
                    "arm_space":{"explicit":["a","b"]},
                    "hyperparameters":{"learning_rate":0.1}})") == Errc::SchemaViolation);
  CHECK(code_of(R"({"bandit_id":"x","algorithm":"NotReal",
                    "arm_space":{"explicit":["a","b"]}})") == Errc::SchemaViolation);
  // Structurally fine but semantically invalid -> InvalidConfig w/ details.
  try {
    config_from_json(R"({"bandit_id":"x","algorithm":"ThompsonBernoulli",
                         "arm_space":{"explicit":["a"]},
                         "hyperparameters":{"epsilon":2.0}})");
    FAIL("expected InvalidConfig");
  } catch (const BanditError& e) {
    CHECK(e.code() == Errc::InvalidConfig);
    std::string msg = e.what();
    CHECK(msg.find("arms") != std::string::npos);
    CHECK(msg.find("epsilon") != std::string::npos);
  }
}

TEST_CASE("equivalence ignores lifecycle status only") {
  BanditConfig a = tabular_config("eq", 3, Algorithm::ThompsonBernoulli);
  BanditConfig b = a;
  b.status = LifecycleStatus::Frozen;
  CHECK(config_equivalent_ignoring_status(a, b));
  b.hyperparameters.epsilon = 0.2;
  CHECK_FALSE(config_equivalent_ignoring_status(a, b));
}
