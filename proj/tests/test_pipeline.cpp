#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>

#include "bandit/errors.hpp"
#include "bandit/event_codec.hpp"
#include "bandit/pipeline.hpp"
#include "bandit/rng.hpp"
#include "helpers.hpp"

using namespace bandit;

namespace {

constexpr int64_t kWindowMs = 10'000;

BanditConfig binary_config(const std::string& id = "b") {
  BanditConfig c = tabular_config(id, 3, Algorithm::ThompsonBernoulli);
  c.attribution_window = std::chrono::seconds(10);
  return c;
}

BanditConfig continuous_config() {
  BanditConfig c = tabular_config("b", 3, Algorithm::EpsilonGreedy);
  c.attribution_window = std::chrono::seconds(10);
  return c;
}

ImpressionEvent imp(const std::string& id, const std::string& req, const std::string& arm,
                    int64_t ts) {
  ImpressionEvent e;
  e.bandit_id = id;
  e.request_id = req;
  e.session_id = "s-" + req;
  e.arms = {arm};
  e.context = Eigen::VectorXd::Ones(1);
  e.param_version = 1;
  e.ts_ms = ts;
  return e;
}

RewardEvent rew(const std::string& id, const std::string& req, double value, int64_t ts) {
  RewardEvent e;
  e.bandit_id = id;
  e.request_id = req;
  e.values = {value};
  e.ts_ms = ts;
  return e;
}

Errc thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const BanditError& e) {
    return e.code();
  }
  return Errc::Ok;
}

}  // namespace

TEST_CASE("event log rejects events that do not fit the bandit") {
  ScopedDir dir("pipeline");
  BanditConfig c = binary_config();
  EventLog log(dir.path(), c);

  CHECK(thrown_code([&] { log.append(imp("other", "r1", "a0", 100)); }) == Errc::UnknownBandit);
  CHECK(thrown_code([&] { log.append(imp("b", "r1", "nope", 100)); }) == Errc::UnknownArm);

  ImpressionEvent wide = imp("b", "r1", "a0", 100);
  wide.context = Eigen::VectorXd::Ones(4);
  CHECK(thrown_code([&] { log.append(wide); }) == Errc::DimensionMismatch);

  ImpressionEvent two = imp("b", "r1", "a0", 100);
  two.arms = {"a0", "a1"};
  CHECK(thrown_code([&] { log.append(two); }) == Errc::SchemaViolation);

  log.append(imp("b", "r1", "a0", 100));
  CHECK(thrown_code([&] { log.append(imp("b", "r2", "a0", 99)); }) == Errc::SchemaViolation);
  CHECK(log.last_impression_ts() == 100);

  CHECK(thrown_code([&] { log.append(rew("other", "r1", 1.0, 120)); }) == Errc::UnknownBandit);
  RewardEvent multi = rew("b", "r1", 1.0, 120);
  multi.values = {1.0, 0.5};
  CHECK(thrown_code([&] { log.append(multi); }) == Errc::LengthMismatch);
  CHECK(thrown_code([&] { log.append(rew("b", "r1", 0.5, 120)); }) == Errc::NonBinaryReward);
  RewardEvent nan = rew("b", "r1", 1.0, 120);
  nan.values = {std::numeric_limits<double>::quiet_NaN()};
  CHECK(thrown_code([&] { log.append(nan); }) == Errc::NonFiniteInput);
  RewardEvent clicked = rew("b", "r1", 1.0, 120);
  clicked.click_position = 0;
  CHECK(thrown_code([&] { log.append(clicked); }) == Errc::SchemaViolation);

  log.append(rew("b", "r1", 1.0, 120));
  CHECK(thrown_code([&] { log.append(rew("b", "r1", 1.0, 119)); }) == Errc::SchemaViolation);
  CHECK(thrown_code([&] { log.append_watermark(119); }) == Errc::SchemaViolation);
  CHECK(log.last_reward_ts() == 120);
}

TEST_CASE("event log enforces ranking shape") {
  ScopedDir dir("pipeline");
  BanditConfig c = cascade_config("b", 5, 3);
  c.attribution_window = std::chrono::seconds(10);
  EventLog log(dir.path(), c);

  ImpressionEvent single = imp("b", "r1", "item0", 100);
  CHECK(thrown_code([&] { log.append(single); }) == Errc::SchemaViolation);
  ImpressionEvent ranked = single;
  ranked.arms = {"item2", "item0", "item4"};
  log.append(ranked);

  RewardEvent deep = rew("b", "r1", 1.0, 150);
  deep.click_position = 3;  // k is 3, positions are 0..2
  CHECK(thrown_code([&] { log.append(deep); }) == Errc::PositionOutOfRange);
  RewardEvent blind = rew("b", "r1", 1.0, 150);
  CHECK(thrown_code([&] { log.append(blind); }) == Errc::SchemaViolation);
  RewardEvent ok = rew("b", "r1", 1.0, 150);
  ok.click_position = 1;
  log.append(ok);
}

TEST_CASE("joiner matches in-window rewards and defaults binary misses") {
  BanditConfig c = binary_config();
  Joiner joiner(c);

  joiner.on_impression(imp("b", "r1", "a0", 1000));
  joiner.on_impression(imp("b", "r2", "a1", 2000));
  // Boundary: reward exactly window late still matches.
  joiner.on_reward(rew("b", "r1", 1.0, 1000 + kWindowMs));
  // r2 never hears back.
  joiner.advance_watermark(2000 + kWindowMs);
  CHECK(joiner.drain_ready().empty());  // expiry is strictly past the window
  joiner.advance_watermark(2000 + kWindowMs + 1);

  auto ready = joiner.drain_ready();
  REQUIRE(ready.size() == 2);
  CHECK(ready[0].request_id == "r1");
  CHECK(ready[0].reward == std::vector<double>{1.0});
  CHECK(ready[1].request_id == "r2");
  CHECK(ready[1].reward == std::vector<double>{0.0});

  const JoinCounters& n = joiner.counters();
  CHECK(n.impressions == 2);
  CHECK(n.rewards == 1);
  CHECK(n.matched == 1);
  CHECK(n.expired_defaulted == 1);
  CHECK(n.expired_dropped == 0);
  CHECK(n.examples == 2);
  CHECK(n.impressions == n.examples + n.expired_dropped);
}

TEST_CASE("binary rewards aggregate by OR, late rewards are discarded") {
  BanditConfig c = binary_config();
  Joiner joiner(c);
  joiner.on_impression(imp("b", "r1", "a0", 1000));
  joiner.on_reward(rew("b", "r1", 0.0, 1500));
  joiner.on_reward(rew("b", "r1", 1.0, 2000));
  joiner.on_reward(rew("b", "r1", 0.0, 2500));
  joiner.advance_watermark(1000 + kWindowMs + 1);
  auto ready = joiner.drain_ready();
  REQUIRE(ready.size() == 1);
  CHECK(ready[0].reward == std::vector<double>{1.0});

  // One more reward for a finalized impression: counted, never credited.
  joiner.on_reward(rew("b", "r1", 1.0, 1000 + kWindowMs + 2));
  CHECK(joiner.counters().discarded_rewards == 1);
  // A reward with no impression at all.
  joiner.on_reward(rew("b", "ghost", 1.0, 1000 + kWindowMs + 3));
  CHECK(joiner.counters().discarded_rewards == 2);
}

TEST_CASE("an in-window zero reward still counts as matched") {
  BanditConfig c = binary_config();
  Joiner joiner(c);
  joiner.on_impression(imp("b", "r1", "a0", 1000));
  joiner.on_reward(rew("b", "r1", 0.0, 1500));
  joiner.advance_watermark(1000 + kWindowMs + 1);
  auto ready = joiner.drain_ready();
  REQUIRE(ready.size() == 1);
  CHECK(ready[0].reward == std::vector<double>{0.0});
  CHECK(joiner.counters().matched == 1);
  CHECK(joiner.counters().expired_defaulted == 0);
}

TEST_CASE("continuous rewards sum and unmatched impressions drop") {
  BanditConfig c = continuous_config();
  Joiner joiner(c);
  joiner.on_impression(imp("b", "r1", "a0", 1000));
  joiner.on_impression(imp("b", "r2", "a1", 1000));
  joiner.on_reward(rew("b", "r1", 2.5, 1500));
  joiner.on_reward(rew("b", "r1", -0.5, 1600));
  joiner.advance_watermark(1000 + kWindowMs + 1);

  auto ready = joiner.drain_ready();
  REQUIRE(ready.size() == 1);
  CHECK(ready[0].request_id == "r1");
  CHECK(ready[0].reward == std::vector<double>{2.0});
  CHECK(joiner.counters().expired_dropped == 1);
  CHECK(joiner.counters().examples == 1);
  // No default example for continuous rewards; conservation holds via drops.
  CHECK(joiner.counters().impressions ==
        joiner.counters().examples + joiner.counters().expired_dropped);
}

TEST_CASE("multi objective rewards sum elementwise") {
  BanditConfig c = ggi_config("b", 3, 2);
  c.attribution_window = std::chrono::seconds(10);
  Joiner joiner(c);
  ImpressionEvent e = imp("b", "r1", "a0", 1000);
  joiner.on_impression(e);
  RewardEvent r1 = rew("b", "r1", 0.0, 1500);
  r1.values = {1.0, 0.25};
  joiner.on_reward(r1);
  RewardEvent r2 = rew("b", "r1", 0.0, 1600);
  r2.values = {0.5, 0.25};
  joiner.on_reward(r2);
  joiner.advance_watermark(1000 + kWindowMs + 1);
  auto ready = joiner.drain_ready();
  REQUIRE(ready.size() == 1);
  CHECK(ready[0].reward == std::vector<double>{1.5, 0.5});
}

TEST_CASE("ranking joins keep the earliest click") {
  BanditConfig c = cascade_config("b", 5, 3);
  c.attribution_window = std::chrono::seconds(10);
  Joiner joiner(c);
  ImpressionEvent e = imp("b", "r1", "item0", 1000);
  e.arms = {"item3", "item1", "item0"};
  joiner.on_impression(e);
  RewardEvent click2 = rew("b", "r1", 1.0, 1500);
  click2.click_position = 2;
  joiner.on_reward(click2);
  RewardEvent click1 = rew("b", "r1", 1.0, 1600);
  click1.click_position = 1;
  joiner.on_reward(click1);
  joiner.advance_watermark(1000 + kWindowMs + 1);
  auto ready = joiner.drain_ready();
  REQUIRE(ready.size() == 1);
  CHECK(ready[0].click_position == std::size_t{1});
  CHECK(ready[0].arms == std::vector<std::string>{"item3", "item1", "item0"});

  // No-click rankings still train: the expired example has no click and every
  // shown item reads as skipped.
  ImpressionEvent quiet = imp("b", "r2", "item0", 20'000);
  quiet.arms = {"item0", "item1", "item2"};
  joiner.on_impression(quiet);
  joiner.advance_watermark(20'000 + kWindowMs + 1);
  auto expired = joiner.drain_ready();
  REQUIRE(expired.size() == 1);
  CHECK(expired[0].request_id == "r2");
  CHECK_FALSE(expired[0].click_position.has_value());
  CHECK(expired[0].reward == std::vector<double>{0.0});
}

TEST_CASE("duplicate request ids are rejected") {
  BanditConfig c = binary_config();
  Joiner joiner(c);
  joiner.on_impression(imp("b", "r1", "a0", 1000));
  CHECK(thrown_code([&] { joiner.on_impression(imp("b", "r1", "a1", 1100)); }) ==
        Errc::SchemaViolation);
}

TEST_CASE("batcher flushes on size with contiguous sequence numbers") {
  FlushPolicy policy;
  policy.max_examples = 3;
  policy.max_wait_ms = 1'000'000;
  Batcher batcher("b", policy);
  for (int i = 0; i < 7; ++i) {
    TrainingExample ex;
    ex.request_id = "r" + std::to_string(i);
    ex.impression_ts_ms = 1000 + i;
    ex.context = Eigen::VectorXd::Ones(1);
    ex.arms = {"a0"};
    ex.reward = {1.0};
    batcher.add(std::move(ex), 2000 + i);
  }
  auto batches = batcher.drain();
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].seq == 1);
  CHECK(batches[1].seq == 2);
  CHECK(batches[0].examples.size() == 3);
  CHECK(batches[0].window_start_ms == 1000);
  CHECK(batches[0].window_end_ms == 1002);
  CHECK(batches[1].window_start_ms == 1003);
  CHECK(batches[1].window_end_ms == 1005);
  CHECK(batcher.next_seq() == 3);  // one example still buffered

  // The straggler flushes once the watermark runs max_wait past its arrival.
  batcher.advance(2006 + policy.max_wait_ms);
  auto rest = batcher.drain();
  REQUIRE(rest.size() == 1);
  CHECK(rest[0].seq == 3);
  CHECK(rest[0].examples.size() == 1);
}

TEST_CASE("batcher time flush measures from the oldest buffered example") {
  FlushPolicy policy;
  policy.max_examples = 100;
  policy.max_wait_ms = 500;
  Batcher batcher("b", policy);
  TrainingExample ex;
  ex.request_id = "r0";
  ex.impression_ts_ms = 1000;
  ex.context = Eigen::VectorXd::Ones(1);
  ex.arms = {"a0"};
  ex.reward = {1.0};
  batcher.add(ex, 2000);
  ex.request_id = "r1";
  batcher.add(ex, 2400);
  batcher.advance(2499);
  CHECK(batcher.drain().empty());
  batcher.advance(2500);
  auto batches = batcher.drain();
  REQUIRE(batches.size() == 1);
  CHECK(batches[0].examples.size() == 2);
}

TEST_CASE("live pipeline and log replay produce byte-identical batches") {
  ScopedDir dir("pipeline");
  BanditConfig c = binary_config();
  FlushPolicy policy;
  policy.max_examples = 4;
  policy.max_wait_ms = 30'000;

  std::vector<TrainingBatch> live;
  {
    RewardPipeline pipe(dir.path(), c, policy);
    Rng rng(5);
    int64_t ts = 1000;
    for (int i = 0; i < 40; ++i) {
      std::string req = "r" + std::to_string(i);
      std::string arm = "a" + std::to_string(i % 3);
      pipe.on_impression(imp("b", req, arm, ts));
      if (rng.uniform01() < 0.6) {
        // Delays stay under the impression stride so reward timestamps never
        // regress; the log enforces per-stream monotonicity.
        pipe.on_reward(rew("b", req, rng.uniform01() < 0.5 ? 1.0 : 0.0,
                           ts + static_cast<int64_t>(rng.uniform01() * 699.0)));
      }
      ts += 700;
    }
    pipe.finish();
    for (auto& b : pipe.take_batches()) live.push_back(std::move(b));
    CHECK(pipe.counters().impressions ==
          pipe.counters().examples + pipe.counters().expired_dropped);
  }
  REQUIRE_FALSE(live.empty());

  auto replayed = replay_batches(dir.path(), c, policy);
  REQUIRE(replayed.size() == live.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    CHECK(encode_batch(replayed[i]) == encode_batch(live[i]));
  }

  // The batch log carries the same bytes in the same order.
  auto logged = read_log(EventLog::batches_path(dir.path(), "b"));
  REQUIRE(logged.size() == live.size());
  for (std::size_t i = 0; i < live.size(); ++i) CHECK(logged[i] == encode_batch(live[i]));
}

TEST_CASE("restart resumes pending joins and batch sequence") {
  ScopedDir dir("pipeline");
  BanditConfig c = binary_config();
  FlushPolicy policy;
  policy.max_examples = 2;
  policy.max_wait_ms = 1'000'000;

  {
    RewardPipeline pipe(dir.path(), c, policy);
    pipe.on_impression(imp("b", "r0", "a0", 1000));
    pipe.on_impression(imp("b", "r1", "a1", 1100));
    pipe.on_reward(rew("b", "r0", 1.0, 1200));
    // Push the watermark so r0 and r1 finalize and flush as batch 1, then
    // leave r2 pending at the crash point.
    pipe.advance_watermark(1100 + kWindowMs + 1);
    pipe.on_impression(imp("b", "r2", "a2", 20'000));
    auto batches = pipe.take_batches();
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].seq == 1);
  }

  RewardPipeline pipe(dir.path(), c, policy);
  // The replay stages the already-logged batch for the trainer's seq guard.
  auto staged = pipe.take_batches();
  REQUIRE(staged.size() == 1);
  CHECK(staged[0].seq == 1);
  CHECK(read_log(EventLog::batches_path(dir.path(), "b")).size() == 1);

  // r2 is still pending; new events continue the stream without regressions.
  pipe.on_impression(imp("b", "r3", "a0", 21'000));
  pipe.on_reward(rew("b", "r2", 1.0, 22'000));
  pipe.finish();
  auto rest = pipe.take_batches();
  REQUIRE(rest.size() == 1);
  CHECK(rest[0].seq == 2);
  REQUIRE(rest[0].examples.size() == 2);
  CHECK(rest[0].examples[0].request_id == "r2");
  CHECK(rest[0].examples[0].reward == std::vector<double>{1.0});
  CHECK(rest[0].examples[1].request_id == "r3");
  CHECK(read_log(EventLog::batches_path(dir.path(), "b")).size() == 2);
}

TEST_CASE("a crash between reward log and batch log appends is repaired") {
  ScopedDir dir("pipeline");
  BanditConfig c = binary_config();
  FlushPolicy policy;
  policy.max_examples = 1;
  policy.max_wait_ms = 1'000'000;

  std::string expected;
  {
    RewardPipeline pipe(dir.path(), c, policy);
    pipe.on_impression(imp("b", "r0", "a0", 1000));
    pipe.on_reward(rew("b", "r0", 1.0, 1200));
    pipe.advance_watermark(1000 + kWindowMs + 1);
    auto batches = pipe.take_batches();
    REQUIRE(batches.size() == 1);
    expected = encode_batch(batches[0]);
  }
  // Simulate the crash window: the flush reached the joiner inputs but the
  // batch record never hit disk.
  std::filesystem::remove(EventLog::batches_path(dir.path(), "b"));

  RewardPipeline pipe(dir.path(), c, policy);
  auto staged = pipe.take_batches();
  REQUIRE(staged.size() == 1);
  CHECK(encode_batch(staged[0]) == expected);
  auto logged = read_log(EventLog::batches_path(dir.path(), "b"));
  REQUIRE(logged.size() == 1);
  CHECK(logged[0] == expected);
}

TEST_CASE("punctuation is only logged when it advances the watermark") {
  ScopedDir dir("pipeline");
  BanditConfig c = binary_config();
  RewardPipeline pipe(dir.path(), c, FlushPolicy{});
  pipe.on_impression(imp("b", "r0", "a0", 5000));
  pipe.advance_watermark(6000);
  pipe.advance_watermark(6000);  // no-op
  pipe.advance_watermark(4000);  // behind the event stream, also a no-op
  pipe.advance_watermark(7000);

  auto records = read_log(EventLog::rewards_path(dir.path(), "b"));
  REQUIRE(records.size() == 2);
  CHECK(decode_watermark(records[0]) == 6000);
  CHECK(decode_watermark(records[1]) == 7000);
}
