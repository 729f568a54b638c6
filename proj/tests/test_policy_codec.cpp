#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <optional>

#include "bandit/errors.hpp"
#include "bandit/policy.hpp"
#include "bandit/policy_codec.hpp"
#include "helpers.hpp"

using namespace bandit;

namespace {

// encode -> decode -> encode must reproduce the bytes exactly; that is what
// makes replayed training land on identical stored parameters.
void check_round_trip(const BanditConfig& config, const PolicyState& policy) {
  std::string text = encode_policy(config, policy);
  PolicyState back = decode_policy(config, text);
  CHECK(back.update_batches == policy.update_batches);
  CHECK(back.state.index() == policy.state.index());
  CHECK(encode_policy(config, back) == text);
}

}  // namespace

TEST_CASE("every policy family round trips, fresh and after updates") {
  SUBCASE("epsilon greedy") {
    BanditConfig c = tabular_config("b", 4, Algorithm::EpsilonGreedy);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<EGState>(p.state);
    s = eg_update(std::move(s), 2, 1.5);
    s = eg_update(std::move(s), 2, -0.5);
    s = eg_update(std::move(s), 0, 0.25);
    p.update_batches = 3;
    check_round_trip(c, p);
  }

  SUBCASE("thompson bernoulli") {
    BanditConfig c = tabular_config("b", 3, Algorithm::ThompsonBernoulli);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<BetaState>(p.state);
    s = beta_update(std::move(s), 1, 1.0);
    s = beta_update(std::move(s), 1, 0.0);
    check_round_trip(c, p);
    PolicyState back = decode_policy(c, encode_policy(c, p));
    CHECK(std::get<BetaState>(back.state).alpha[1] == 2.0);
    CHECK(std::get<BetaState>(back.state).beta[1] == 2.0);
  }

  SUBCASE("exp3") {
    BanditConfig c = tabular_config("b", 5, Algorithm::Exp3);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<Exp3State>(p.state);
    s = exp3_update(std::move(s), 3, 1.0, 0.2, 0.1);
    check_round_trip(c, p);
  }

  SUBCASE("cascade") {
    BanditConfig c = cascade_config("b", 5, 3);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<CascadeState>(p.state);
    s = cascade_update(std::move(s), {4, 1, 0}, std::optional<std::size_t>{1});
    check_round_trip(c, p);
  }

  SUBCASE("per-arm gaussians") {
    BanditConfig c = linear_config("b", 3, Algorithm::LinearTS, RewardSpec::Kind::Continuous);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<RLSState>(p.state);
    Eigen::VectorXd x(3);
    x << 1.0, 0.3, -0.2;
    s.arms[1] = rls_update(std::move(s.arms[1]), x, 0.7);
    check_round_trip(c, p);
  }

  SUBCASE("per-arm logistics") {
    BanditConfig c = linear_config("b", 3, Algorithm::LinearTS, RewardSpec::Kind::Binary);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<BLRState>(p.state);
    Eigen::VectorXd x(3);
    x << 1.0, 0.5, 0.5;
    s.arms[0] = blr_update(std::move(s.arms[0]), {Observation{x, 1.0}});
    check_round_trip(c, p);
  }

  SUBCASE("shared gaussian over slots") {
    BanditConfig c = slotted_config("b", Algorithm::LinearEG, RewardSpec::Kind::Continuous);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<LinearGaussian>(p.state);
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(s.m.size());
    phi(0) = 1.0;
    phi(2) = 1.0;
    s = rls_update(std::move(s), phi, 1.2);
    check_round_trip(c, p);
  }

  SUBCASE("shared logistic over slots") {
    BanditConfig c = slotted_config("b", Algorithm::LinearTS, RewardSpec::Kind::Binary);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<LinearLogistic>(p.state);
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(s.m.size());
    phi(0) = 1.0;
    phi(3) = 1.0;
    s = blr_update(std::move(s), {Observation{phi, 0.0}});
    check_round_trip(c, p);
  }

  SUBCASE("multi objective per arm") {
    BanditConfig c = ggi_config("b", 3, 2);
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<MultiRLSState>(p.state);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    s.objectives[1].arms[2] = rls_update(std::move(s.objectives[1].arms[2]), x, 0.4);
    check_round_trip(c, p);
  }

  SUBCASE("multi objective shared") {
    BanditConfig c = slotted_config("b", Algorithm::MultiObjectiveGGI,
                                    RewardSpec::Kind::MultiObjective);
    c.reward_spec.objectives = 2;
    c.hyperparameters.ggi_weights = {2.0, 1.0};
    PolicyState p = init_policy(c);
    check_round_trip(c, p);
    auto& s = std::get<MultiSharedState>(p.state);
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(s.objectives[0].m.size());
    phi(0) = 1.0;
    s.objectives[0] = rls_update(std::move(s.objectives[0]), phi, 0.9);
    check_round_trip(c, p);
  }
}

TEST_CASE("decoded numerics match the originals exactly") {
  BanditConfig c = linear_config("b", 2, Algorithm::LinearTS, RewardSpec::Kind::Continuous);
  PolicyState p = init_policy(c);
  auto& s = std::get<RLSState>(p.state);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x(3);
    x << 1.0, rng.uniform01(), rng.uniform01();
    s.arms[i % 2] = rls_update(std::move(s.arms[i % 2]), x, rng.gaussian());
  }
  PolicyState back = decode_policy(c, encode_policy(c, p));
  const auto& b = std::get<RLSState>(back.state);
  for (int a = 0; a < 2; ++a) {
    CHECK((b.arms[a].m - s.arms[a].m).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((b.arms[a].P - s.arms[a].P).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("decode rejects documents that do not fit the config") {
  BanditConfig ts = tabular_config("b", 3, Algorithm::ThompsonBernoulli);
  BanditConfig eg = tabular_config("b", 3, Algorithm::EpsilonGreedy);
  std::string beta_doc = encode_policy(ts, init_policy(ts));

  auto code_of = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const BanditError& e) {
      return e.code();
    }
    return Errc::Ok;
  };

  CHECK(code_of([&] { decode_policy(eg, beta_doc); }) == Errc::AlgorithmMismatch);
  CHECK(code_of([&] { decode_policy(ts, "{broken"); }) == Errc::MalformedRecord);
  CHECK(code_of([&] { decode_policy(ts, "[]"); }) == Errc::SchemaViolation);
  CHECK(code_of([&] { decode_policy(ts, "{}"); }) == Errc::SchemaViolation);

  // Arm set mismatch: four-arm document into a three-arm config.
  BanditConfig ts4 = tabular_config("b", 4, Algorithm::ThompsonBernoulli);
  std::string four = encode_policy(ts4, init_policy(ts4));
  CHECK(code_of([&] { decode_policy(ts, four); }) == Errc::SchemaViolation);

  // Dimension mismatch: params built against a wider schema.
  BanditConfig lin = linear_config("b", 3, Algorithm::LinearTS, RewardSpec::Kind::Continuous);
  std::string lin_doc = encode_policy(lin, init_policy(lin));
  BanditConfig narrow = lin;
  narrow.context_schema.features.pop_back();
  CHECK(code_of([&] { decode_policy(narrow, lin_doc); }) == Errc::DimensionMismatch);
}
