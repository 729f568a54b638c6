// Sampling and update hot paths. Everything here sits on the request path of
// the sampler or the batch path of the trainer, so per-call cost matters.

#include <benchmark/benchmark.h>

#include <vector>

#include "bandit/policies/linear.hpp"
#include "bandit/policies/mab.hpp"
#include "bandit/policies/structured.hpp"
#include "bandit/rng.hpp"

using namespace bandit;

static void BM_BetaSample(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  BetaState st = make_beta(k);
  Rng rng(1);
  for (std::size_t a = 0; a < k; ++a) st = beta_update(std::move(st), a, rng.uniform01() < 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(beta_sample(st, rng));
  }
}
BENCHMARK(BM_BetaSample)->Arg(10)->Arg(100);

static void BM_Exp3Distribution(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Exp3State st = make_exp3(k);
  Rng rng(2);
  for (std::size_t a = 0; a < k; ++a) {
    st = exp3_update(std::move(st), a, rng.uniform01(), 1.0 / static_cast<double>(k), 0.1);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(exp3_distribution(st, 0.1));
  }
}
BENCHMARK(BM_Exp3Distribution)->Arg(10)->Arg(100);

static void BM_IgwDistribution(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> scores(k);
  for (double& s : scores) s = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(igw_distribution(scores, 250.0));
  }
}
BENCHMARK(BM_IgwDistribution)->Arg(10)->Arg(100);

static void BM_RlsUpdate(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  LinearGaussian model = make_gaussian(d, 1.0);
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (auto _ : state) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = rng.gaussian();
    model = rls_update(std::move(model), x, rng.gaussian());
  }
}
BENCHMARK(BM_RlsUpdate)->Arg(4)->Arg(16)->Arg(64);

static void BM_BlrUpdateBatch100(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  const LinearLogistic prior = make_logistic(d, 1.0);
  std::vector<Observation> batch(100);
  for (auto& obs : batch) {
    obs.x = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(d),
                                         [&](Eigen::Index) { return rng.gaussian(); });
    obs.y = static_cast<double>(rng.uniform_index(2));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(blr_update(prior, batch));
  }
}
BENCHMARK(BM_BlrUpdateBatch100)->Arg(4)->Arg(16);

static void BM_LinearTsScores(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 16;
  Rng rng(6);
  RLSState st = make_rls_state(k, d, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(d),
                                                   [&](Eigen::Index) { return rng.gaussian(); });
  for (auto _ : state) {
    benchmark::DoNotOptimize(ts_scores(st, x, rng));
  }
}
BENCHMARK(BM_LinearTsScores)->Arg(10)->Arg(100);

static void BM_CascadeSample(benchmark::State& state) {
  const auto items = static_cast<std::size_t>(state.range(0));
  CascadeState st = make_cascade(items);
  Rng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cascade_sample(st, 10, rng));
  }
}
BENCHMARK(BM_CascadeSample)->Arg(50)->Arg(500);

static void BM_GgiScalarize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = 1.0 / static_cast<double>(i + 1);
  const GGIWeights weights = GGIWeights::make(raw);
  Rng rng(8);
  std::vector<double> values(n);
  for (double& v : values) v = rng.uniform(0.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ggi_scalarize(values, weights));
  }
}
BENCHMARK(BM_GgiScalarize)->Arg(4)->Arg(16);

static void BM_GreedySearch(benchmark::State& state) {
  const auto n_slots = static_cast<std::size_t>(state.range(0));
  const auto n_opts = static_cast<std::size_t>(state.range(1));
  SlottedArms space;
  std::vector<std::vector<double>> table(n_slots, std::vector<double>(n_opts));
  Rng rng(9);
  for (std::size_t s = 0; s < n_slots; ++s) {
    Slot slot;
    slot.name = "s" + std::to_string(s);
    for (std::size_t o = 0; o < n_opts; ++o) {
      slot.options.push_back("o" + std::to_string(o));
      table[s][o] = rng.gaussian();
    }
    space.slots.push_back(std::move(slot));
  }
  const SlotScoreFn score = [&](const std::vector<std::size_t>& a) {
    double v = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) v += table[s][a[s]];
    return v;
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_search(score, space, GreedyBudget{}));
  }
}
BENCHMARK(BM_GreedySearch)->Args({3, 5})->Args({7, 10});
