// End-to-end decision latency through the sampler, the number the serving
// path lives or dies by. Miss means a fresh policy draw plus cache insert;
// hit means the session cache short-circuits everything.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <string>

#include "bandit/clock.hpp"
#include "bandit/config.hpp"
#include "bandit/sampler.hpp"
#include "bandit/store.hpp"

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

BanditConfig config_for(Algorithm algo, std::size_t k) {
  BanditConfig c;
  c.bandit_id = "b";
  c.algorithm = algo;
  ExplicitArms arms;
  for (std::size_t i = 0; i < k; ++i) arms.ids.push_back("a" + std::to_string(i));
  c.arm_space.space = arms;
  if (algo == Algorithm::LinearTS) {
    c.context_schema = {FeatureSpec{"x0", NumericKind{0.0, 1.0}},
                        FeatureSpec{"x1", NumericKind{-1.0, 1.0}}};
  }
  return c;
}

}  // namespace

static void BM_SamplerMiss(benchmark::State& state) {
  TempDir dir("sampler_miss");
  SimClock clock(1000);
  BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
  store.put_config(config_for(Algorithm::ThompsonBernoulli, static_cast<std::size_t>(state.range(0))));
  SamplerOptions options;
  options.cache_capacity = 4096;  // every distinct session evicts an old one
  Sampler sampler(&store, options, &clock, 1);
  int64_t n = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.sample("b", "s" + std::to_string(n++), RawContext{}));
  }
}
BENCHMARK(BM_SamplerMiss)->Arg(10)->Arg(100);

static void BM_SamplerHit(benchmark::State& state) {
  TempDir dir("sampler_hit");
  SimClock clock(1000);
  BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
  store.put_config(config_for(Algorithm::ThompsonBernoulli, 10));
  Sampler sampler(&store, SamplerOptions{}, &clock, 1);
  sampler.sample("b", "pinned", RawContext{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.sample("b", "pinned", RawContext{}));
  }
}
BENCHMARK(BM_SamplerHit);

static void BM_SamplerLinearMiss(benchmark::State& state) {
  TempDir dir("sampler_linear");
  SimClock clock(1000);
  BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
  store.put_config(config_for(Algorithm::LinearTS, static_cast<std::size_t>(state.range(0))));
  SamplerOptions options;
  options.cache_capacity = 4096;
  Sampler sampler(&store, options, &clock, 1);
  RawContext raw{{"x0", 0.4}, {"x1", -0.2}};
  int64_t n = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampler.sample("b", "s" + std::to_string(n++), raw));
  }
}
BENCHMARK(BM_SamplerLinearMiss)->Arg(10)->Arg(100);
