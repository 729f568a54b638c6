#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bandit/events.hpp"
#include "bandit/policy.hpp"
#include "bandit/store.hpp"

namespace bandit {

struct ApplyResult {
  PolicyState state;
  int64_t applied_examples = 0;
  int64_t poisoned_examples = 0;
};

// Folds one batch into the policy state. A malformed example poisons only
// itself (counted, skipped); the rest of the batch still applies. Logistic
// models group a batch's examples into one posterior update per arm.
ApplyResult apply_batch(const BanditConfig& config, PolicyState state, const TrainingBatch& batch);

struct TrainerCounters {
  int64_t applied_batches = 0;
  int64_t poisoned_examples = 0;
  int64_t skipped_replay = 0;
  int64_t dropped_frozen = 0;
  int64_t cas_conflicts = 0;
};

enum class TrainOutcome { Applied, SkippedReplay, DroppedFrozen };

// Consumes training batches and commits updated parameters through the
// store's CAS. Replays (seq already folded in) are skipped, so at-least-once
// batch delivery is safe. Safe for concurrent use.
class Trainer {
 public:
  explicit Trainer(BanditStore* store) : store_(store) {}

  TrainOutcome process(const TrainingBatch& batch);
  TrainerCounters counters() const;

 private:
  TrainOutcome attempt(const TrainingBatch& batch, bool may_retry);

  BanditStore* store_;
  mutable std::mutex mu_;
  TrainerCounters counters_;
};

// Fixed worker pool with bandit-id affinity: batches for one bandit land on
// one worker, so CAS conflicts only come from out-of-band writers.
class TrainerPool {
 public:
  TrainerPool(BanditStore* store, std::size_t workers);
  ~TrainerPool();

  void submit(TrainingBatch batch);
  // Blocks until every queued batch has been processed.
  void drain();
  void stop();

  TrainerCounters counters() const { return trainer_.counters(); }
  int64_t failed_batches() const;

 private:
  struct Lane {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<TrainingBatch> queue;
    int64_t in_flight = 0;
  };

  void worker(Lane& lane);

  Trainer trainer_;
  std::vector<std::unique_ptr<Lane>> lanes_;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
  mutable std::mutex failed_mu_;
  int64_t failed_ = 0;
};

}  // namespace bandit
