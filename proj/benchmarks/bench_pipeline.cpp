// Event intake throughput: impression logging, the windowed join, batch
// flushes, and the batch codec round trip.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "bandit/config.hpp"
#include "bandit/event_codec.hpp"
#include "bandit/events.hpp"
#include "bandit/pipeline.hpp"

using namespace bandit;

namespace {

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& tag)
      : path((std::filesystem::temp_directory_path() / ("bandit_bench_" + tag)).string()) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

BanditConfig small_config(const std::string& id) {
  BanditConfig c;
  c.bandit_id = id;
  c.algorithm = Algorithm::ThompsonBernoulli;
  c.arm_space.space = ExplicitArms{{"a0", "a1", "a2"}};
  c.attribution_window = std::chrono::seconds(5);
  return c;
}

}  // namespace

static void BM_PipelineEvent(benchmark::State& state) {
  // One impression plus its reward per iteration, watermark riding along.
  TempDir dir("pipeline_event");
  RewardPipeline pipeline(dir.path, small_config("b"), FlushPolicy{100, 60'000});
  int64_t t = 0, n = 0;
  for (auto _ : state) {
    ImpressionEvent imp;
    imp.bandit_id = "b";
    imp.request_id = "r" + std::to_string(n);
    imp.session_id = "s" + std::to_string(n);
    imp.arms = {"a0"};
    imp.context = Eigen::VectorXd::Ones(1);
    imp.param_version = 1;
    imp.ts_ms = t;
    pipeline.on_impression(imp);
    RewardEvent rew;
    rew.bandit_id = "b";
    rew.request_id = imp.request_id;
    rew.values = {1.0};
    rew.ts_ms = t + 1;
    pipeline.on_reward(rew);
    t += 1000;
    n += 1;
    if ((n & 1023) == 0) benchmark::DoNotOptimize(pipeline.take_batches());
  }
}
BENCHMARK(BM_PipelineEvent);

static void BM_BatchCodecRoundTrip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  TrainingBatch batch;
  batch.bandit_id = "b";
  batch.seq = 1;
  batch.window_start_ms = 0;
  batch.window_end_ms = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.request_id = "r" + std::to_string(i);
    ex.impression_ts_ms = static_cast<int64_t>(i);
    ex.context = Eigen::VectorXd::Ones(8);
    ex.arms = {"a0"};
    ex.reward = {1.0};
    batch.examples.push_back(std::move(ex));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_batch(encode_batch(batch)));
  }
}
BENCHMARK(BM_BatchCodecRoundTrip)->Arg(10)->Arg(100);

static void BM_ReplayBatches(benchmark::State& state) {
  // Full log-to-batches rederivation of a 2000-impression run.
  TempDir dir("replay");
  const BanditConfig config = small_config("b");
  const FlushPolicy flush{100, 60'000};
  {
    RewardPipeline pipeline(dir.path, config, flush);
    for (int64_t i = 0; i < 2000; ++i) {
      ImpressionEvent imp;
      imp.bandit_id = "b";
      imp.request_id = "r" + std::to_string(i);
      imp.session_id = "s";
      imp.arms = {"a0"};
      imp.context = Eigen::VectorXd::Ones(1);
      imp.param_version = 1;
      imp.ts_ms = i * 1000;
      pipeline.on_impression(imp);
      RewardEvent rew;
      rew.bandit_id = "b";
      rew.request_id = imp.request_id;
      rew.values = {1.0};
      rew.ts_ms = i * 1000 + 1;
      pipeline.on_reward(rew);
    }
    pipeline.finish();
    pipeline.take_batches();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(replay_batches(dir.path, config, flush));
  }
}
BENCHMARK(BM_ReplayBatches);
