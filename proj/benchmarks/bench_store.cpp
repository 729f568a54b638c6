// Store read and commit paths. get_params is a snapshot swap and should stay
// in the tens of nanoseconds; cas_put_params pays for serialization plus the
// log append (fsync off here, so this is the no-durability floor).

#include <benchmark/benchmark.h>

#include <filesystem>
#include <string>

#include "bandit/clock.hpp"
#include "bandit/config.hpp"
#include "bandit/policy.hpp"
#include "bandit/policy_codec.hpp"
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

BanditConfig ts_config(const std::string& id, std::size_t k) {
  BanditConfig c;
  c.bandit_id = id;
  c.algorithm = Algorithm::ThompsonBernoulli;
  ExplicitArms arms;
  for (std::size_t i = 0; i < k; ++i) arms.ids.push_back("a" + std::to_string(i));
  c.arm_space.space = arms;
  return c;
}

}  // namespace

static void BM_StoreGetParams(benchmark::State& state) {
  TempDir dir("get_params");
  SystemClock clock;
  BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
  store.put_config(ts_config("b", 10));
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.get_params("b"));
  }
}
BENCHMARK(BM_StoreGetParams);

static void BM_StoreCasPutParams(benchmark::State& state) {
  TempDir dir("cas_put");
  SystemClock clock;
  BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
  const BanditConfig config = ts_config("b", static_cast<std::size_t>(state.range(0)));
  store.put_config(config);
  const std::string payload = encode_policy(config, init_policy(config));
  int64_t version = 1, seq = 0;
  for (auto _ : state) {
    const CasOutcome out = store.cas_put_params("b", version, payload, ++seq);
    benchmark::DoNotOptimize(out);
    version = out.version;
  }
}
BENCHMARK(BM_StoreCasPutParams)->Arg(10)->Arg(100);

static void BM_StoreOpenReplay(benchmark::State& state) {
  // Cost of opening a store whose log holds `range` parameter versions.
  TempDir dir("open_replay");
  SystemClock clock;
  const BanditConfig config = ts_config("b", 10);
  {
    BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
    store.put_config(config);
    const std::string payload = encode_policy(config, init_policy(config));
    int64_t version = 1;
    for (int64_t i = 0; i < state.range(0); ++i) {
      version = store.cas_put_params("b", version, payload, i + 1).version;
    }
  }
  for (auto _ : state) {
    BanditStore store(dir.path, StoreOptions{false, 1 << 20}, &clock);
    benchmark::DoNotOptimize(store.get_params("b"));
  }
}
BENCHMARK(BM_StoreOpenReplay)->Arg(100)->Arg(1000);
