#pragma once

#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "bandit/config.hpp"
#include "bandit/events.hpp"
#include "bandit/framing.hpp"

namespace bandit {

struct FlushPolicy {
  std::size_t max_examples = 100;
  int64_t max_wait_ms = 60'000;  // event time between finalization and flush
};

// Validating appender for one bandit's impression and reward logs. Offsets
// count records per log. Watermark punctuation lands in the rewards log so a
// replay sees every event-time advance the live pipeline saw.
class EventLog {
 public:
  EventLog(std::string logs_dir, const BanditConfig& config, bool fsync = false);

  int64_t append(const ImpressionEvent& e);
  int64_t append(const RewardEvent& e);
  int64_t append_watermark(int64_t ts_ms);

  int64_t last_impression_ts() const { return last_impression_ts_; }
  int64_t last_reward_ts() const { return last_reward_ts_; }
  // Moves the ordering floors forward after a log replay, so appends keep
  // rejecting regressions across restarts.
  void seed_ordering(int64_t impression_ts, int64_t reward_ts);

  static std::string impressions_path(const std::string& logs_dir, const std::string& bandit_id);
  static std::string rewards_path(const std::string& logs_dir, const std::string& bandit_id);
  static std::string batches_path(const std::string& logs_dir, const std::string& bandit_id);

 private:
  BanditConfig config_;
  std::unique_ptr<RecordWriter> impressions_;
  std::unique_ptr<RecordWriter> rewards_;
  int64_t impression_offset_ = 0;
  int64_t reward_offset_ = 0;
  int64_t last_impression_ts_ = -1;
  int64_t last_reward_ts_ = -1;
};

struct JoinCounters {
  int64_t impressions = 0;
  int64_t rewards = 0;
  int64_t matched = 0;            // impressions finalized with >= 1 in-window reward
  int64_t expired_defaulted = 0;  // finalized with the default reward
  int64_t expired_dropped = 0;    // finalized without an example (continuous/multi)
  int64_t discarded_rewards = 0;  // late or unmatched reward events
  int64_t examples = 0;
};

// Event-time windowed join. Impressions wait until the watermark passes
// impression.ts + window, accumulating any in-window rewards, then finalize
// to exactly one example or one counted drop. Timestamps advance the
// watermark implicitly; punctuation advances it when no events flow.
class Joiner {
 public:
  explicit Joiner(const BanditConfig& config);

  void on_impression(const ImpressionEvent& e);
  void on_reward(const RewardEvent& e);
  void advance_watermark(int64_t ts_ms);

  std::vector<TrainingExample> drain_ready();
  int64_t watermark() const { return watermark_; }
  std::size_t pending() const { return pending_.size(); }
  const JoinCounters& counters() const { return counters_; }

 private:
  struct Pending {
    TrainingExample example;
    bool matched = false;
  };

  void expire_up_to_watermark();
  void finalize(Pending& p);

  BanditConfig config_;
  int64_t window_ms_ = 0;
  int64_t watermark_ = -1;
  std::deque<Pending> pending_;  // impression-ts order
  std::unordered_map<std::string, std::size_t> by_request_;  // request_id -> pending_ pos + drained_
  std::size_t drained_ = 0;  // pending_ positions already popped
  std::vector<TrainingExample> ready_;
  JoinCounters counters_;
};

// Groups finalized examples into batches: a size flush at max_examples, an
// event-time flush when the watermark runs max_wait past a buffered example's
// finalization time. Sequence numbers are contiguous from 1.
class Batcher {
 public:
  Batcher(std::string bandit_id, FlushPolicy policy);

  void add(TrainingExample example, int64_t finalized_at_ms);
  void advance(int64_t watermark_ms);

  std::vector<TrainingBatch> drain();
  int64_t next_seq() const { return next_seq_; }

 private:
  void flush();

  std::string bandit_id_;
  FlushPolicy policy_;
  int64_t next_seq_ = 1;
  int64_t buffer_opened_at_ms_ = 0;
  std::vector<TrainingExample> buffer_;
  std::vector<TrainingBatch> out_;
};

// One bandit's logging, joining, and batching glued together. Batches are
// appended to the batches log as they flush and handed to the caller via
// take_batches. Construction replays any logs already on disk, so a restart
// resumes with the crashed process's pending joins and batch sequence; every
// re-derived batch is staged for take_batches and the trainer's seq guard
// drops the ones already applied.
class RewardPipeline {
 public:
  RewardPipeline(std::string logs_dir, const BanditConfig& config, FlushPolicy policy,
                 bool fsync = false);

  void on_impression(const ImpressionEvent& e);
  void on_reward(const RewardEvent& e);
  void advance_watermark(int64_t ts_ms);
  // Punctuates far enough past the last event that every pending impression
  // finalizes and every buffered example flushes.
  void finish();

  std::vector<TrainingBatch> take_batches();
  const JoinCounters& counters() const { return joiner_.counters(); }
  int64_t watermark() const { return joiner_.watermark(); }
  int64_t batches_emitted() const { return batcher_.next_seq() - 1; }
  const BanditConfig& config() const { return config_; }

 private:
  void pump();

  BanditConfig config_;
  FlushPolicy policy_;
  EventLog log_;
  Joiner joiner_;
  Batcher batcher_;
  std::unique_ptr<RecordWriter> batch_writer_;
  std::vector<TrainingBatch> out_;
  int64_t last_event_ts_ = 0;
};

// Re-derives the batch stream from the impression and reward logs alone:
// merges the two logs in event-time order (impressions first on ties) and
// replays them through a fresh Joiner and Batcher. Identical logs yield
// byte-identical batches.
std::vector<TrainingBatch> replay_batches(const std::string& logs_dir, const BanditConfig& config,
                                          FlushPolicy policy);

}  // namespace bandit
