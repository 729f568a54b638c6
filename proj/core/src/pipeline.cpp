#include "bandit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "bandit/errors.hpp"
#include "bandit/event_codec.hpp"
#include "bandit/policy.hpp"

namespace bandit {

namespace {

int64_t window_millis(const BanditConfig& config) {
  return config.attribution_window.count() * 1000;
}

void check_values_finite(const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "reward value is not finite");
  }
}

}  // namespace

std::string EventLog::impressions_path(const std::string& logs_dir, const std::string& bandit_id) {
  return logs_dir + "/" + bandit_id + ".impressions.log";
}

std::string EventLog::rewards_path(const std::string& logs_dir, const std::string& bandit_id) {
  return logs_dir + "/" + bandit_id + ".rewards.log";
}

std::string EventLog::batches_path(const std::string& logs_dir, const std::string& bandit_id) {
  return logs_dir + "/" + bandit_id + ".batches.log";
}

EventLog::EventLog(std::string logs_dir, const BanditConfig& config, bool fsync)
    : config_(config),
      impressions_(new RecordWriter(impressions_path(logs_dir, config.bandit_id), fsync)),
      rewards_(new RecordWriter(rewards_path(logs_dir, config.bandit_id), fsync)) {}

int64_t EventLog::append(const ImpressionEvent& e) {
  if (e.bandit_id != config_.bandit_id) {
    fail(Errc::UnknownBandit, "impression for bandit " + e.bandit_id + " routed to " +
                                  config_.bandit_id);
  }
  const std::size_t expected_arms =
      config_.algorithm == Algorithm::CascadeTS ? config_.hyperparameters.ranking_k : 1;
  if (e.arms.size() != expected_arms) {
    fail(Errc::SchemaViolation, "impression carries " + std::to_string(e.arms.size()) +
                                    " arms, expected " + std::to_string(expected_arms));
  }
  ArmIndexer indexer(config_.arm_space);
  for (const auto& arm : e.arms) indexer.index_of(arm);  // throws UnknownArm
  const auto dim = static_cast<Eigen::Index>(context_dimension(config_.context_schema));
  if (e.context.size() != dim) {
    fail(Errc::DimensionMismatch, "impression context has " + std::to_string(e.context.size()) +
                                      " features, schema encodes " + std::to_string(dim));
  }
  if (e.ts_ms < last_impression_ts_) {
    fail(Errc::SchemaViolation, "impression timestamps regress: " + std::to_string(e.ts_ms) +
                                    " after " + std::to_string(last_impression_ts_));
  }
  impressions_->append(encode_impression(e));
  last_impression_ts_ = e.ts_ms;
  return impression_offset_++;
}

int64_t EventLog::append(const RewardEvent& e) {
  if (e.bandit_id != config_.bandit_id) {
    fail(Errc::UnknownBandit,
         "reward for bandit " + e.bandit_id + " routed to " + config_.bandit_id);
  }
  if (e.values.size() != config_.reward_spec.objectives) {
    fail(Errc::LengthMismatch, "reward carries " + std::to_string(e.values.size()) +
                                   " values, spec has " +
                                   std::to_string(config_.reward_spec.objectives));
  }
  check_values_finite(e.values);
  if (config_.reward_spec.kind != RewardSpec::Kind::Continuous &&
      config_.reward_spec.kind != RewardSpec::Kind::MultiObjective) {
    for (double v : e.values) {
      if (v != 0.0 && v != 1.0) fail(Errc::NonBinaryReward, "binary reward must be 0 or 1");
    }
  }
  if (e.click_position) {
    if (config_.algorithm != Algorithm::CascadeTS) {
      fail(Errc::SchemaViolation, "click_position only applies to ranking bandits");
    }
    if (*e.click_position >= config_.hyperparameters.ranking_k) {
      fail(Errc::PositionOutOfRange, "click position " + std::to_string(*e.click_position) +
                                         " with k=" +
                                         std::to_string(config_.hyperparameters.ranking_k));
    }
  }
  if (config_.algorithm == Algorithm::CascadeTS && !e.values.empty() && e.values[0] == 1.0 &&
      !e.click_position) {
    fail(Errc::SchemaViolation, "ranking click reward needs a click_position");
  }
  if (e.ts_ms < last_reward_ts_) {
    fail(Errc::SchemaViolation, "reward timestamps regress: " + std::to_string(e.ts_ms) +
                                    " after " + std::to_string(last_reward_ts_));
  }
  rewards_->append(encode_reward(e));
  last_reward_ts_ = e.ts_ms;
  return reward_offset_++;
}

int64_t EventLog::append_watermark(int64_t ts_ms) {
  if (ts_ms < last_reward_ts_) {
    fail(Errc::SchemaViolation, "watermark punctuation regresses: " + std::to_string(ts_ms) +
                                    " after " + std::to_string(last_reward_ts_));
  }
  rewards_->append(encode_watermark(ts_ms));
  last_reward_ts_ = ts_ms;
  return reward_offset_++;
}

void EventLog::seed_ordering(int64_t impression_ts, int64_t reward_ts) {
  last_impression_ts_ = std::max(last_impression_ts_, impression_ts);
  last_reward_ts_ = std::max(last_reward_ts_, reward_ts);
}

Joiner::Joiner(const BanditConfig& config)
    : config_(config), window_ms_(window_millis(config)) {}

void Joiner::on_impression(const ImpressionEvent& e) {
  if (by_request_.count(e.request_id) != 0) {
    fail(Errc::SchemaViolation, "duplicate request_id " + e.request_id);
  }
  counters_.impressions += 1;
  Pending p;
  p.example.request_id = e.request_id;
  p.example.impression_ts_ms = e.ts_ms;
  p.example.context = e.context;
  p.example.arms = e.arms;
  p.example.probability = e.probability;
  // Defaults double as aggregation identities: OR over {0}, sums over zeros.
  p.example.reward.assign(config_.reward_spec.objectives, 0.0);
  by_request_[e.request_id] = drained_ + pending_.size();
  pending_.push_back(std::move(p));
  watermark_ = std::max(watermark_, e.ts_ms);
  expire_up_to_watermark();
}

void Joiner::on_reward(const RewardEvent& e) {
  counters_.rewards += 1;
  auto it = by_request_.find(e.request_id);
  bool credited = false;
  if (it != by_request_.end()) {
    Pending& p = pending_[it->second - drained_];
    const int64_t gap = e.ts_ms - p.example.impression_ts_ms;
    if (gap <= window_ms_) {
      switch (config_.reward_spec.kind) {
        case RewardSpec::Kind::Binary:
          p.example.reward[0] = std::max(p.example.reward[0], e.values[0]);
          break;
        case RewardSpec::Kind::Continuous:
          p.example.reward[0] += e.values[0];
          break;
        case RewardSpec::Kind::MultiObjective:
          for (std::size_t j = 0; j < e.values.size(); ++j) p.example.reward[j] += e.values[j];
          break;
      }
      if (e.click_position) {
        p.example.click_position =
            p.example.click_position
                ? std::min(*p.example.click_position, *e.click_position)
                : *e.click_position;
      }
      p.matched = true;
      credited = true;
    }
  }
  if (!credited) counters_.discarded_rewards += 1;
  watermark_ = std::max(watermark_, e.ts_ms);
  expire_up_to_watermark();
}

void Joiner::advance_watermark(int64_t ts_ms) {
  watermark_ = std::max(watermark_, ts_ms);
  expire_up_to_watermark();
}

void Joiner::expire_up_to_watermark() {
  while (!pending_.empty() &&
         watermark_ > pending_.front().example.impression_ts_ms + window_ms_) {
    finalize(pending_.front());
    by_request_.erase(pending_.front().example.request_id);
    pending_.pop_front();
    drained_ += 1;
  }
}

void Joiner::finalize(Pending& p) {
  if (p.matched) {
    counters_.matched += 1;
  } else if (config_.reward_spec.kind == RewardSpec::Kind::Binary) {
    // Absence of feedback is an observed zero (or a no-click ranking).
    counters_.expired_defaulted += 1;
  } else {
    counters_.expired_dropped += 1;
    return;
  }
  counters_.examples += 1;
  ready_.push_back(std::move(p.example));
}

std::vector<TrainingExample> Joiner::drain_ready() {
  std::vector<TrainingExample> out;
  out.swap(ready_);
  return out;
}

Batcher::Batcher(std::string bandit_id, FlushPolicy policy)
    : bandit_id_(std::move(bandit_id)), policy_(policy) {}

void Batcher::add(TrainingExample example, int64_t finalized_at_ms) {
  if (buffer_.empty()) buffer_opened_at_ms_ = finalized_at_ms;
  buffer_.push_back(std::move(example));
  if (buffer_.size() >= policy_.max_examples) flush();
}

void Batcher::advance(int64_t watermark_ms) {
  if (!buffer_.empty() && watermark_ms - buffer_opened_at_ms_ >= policy_.max_wait_ms) flush();
}

void Batcher::flush() {
  if (buffer_.empty()) return;
  TrainingBatch b;
  b.bandit_id = bandit_id_;
  b.seq = next_seq_++;
  b.window_start_ms = buffer_.front().impression_ts_ms;
  b.window_end_ms = buffer_.back().impression_ts_ms;
  b.examples = std::move(buffer_);
  buffer_.clear();
  out_.push_back(std::move(b));
}

std::vector<TrainingBatch> Batcher::drain() {
  std::vector<TrainingBatch> out;
  out.swap(out_);
  return out;
}

namespace {

struct MergeTail {
  int64_t last_impression_ts = -1;
  int64_t last_reward_ts = -1;
};

// Feeds both logs through a joiner and batcher in the order the live
// pipeline saw them: event-time ascending, same-timestamp impressions first.
template <typename Emit>
MergeTail merge_logs(const std::vector<std::string>& impression_records,
                     const std::vector<std::string>& reward_records, Joiner& joiner,
                     Batcher& batcher, int64_t window_ms, Emit emit) {
  MergeTail tail;
  std::size_t next_impression = 0;
  auto pump = [&] {
    for (auto& ex : joiner.drain_ready()) {
      const int64_t finalized_at = ex.impression_ts_ms + window_ms;
      batcher.add(std::move(ex), finalized_at);
    }
    batcher.advance(joiner.watermark());
    for (auto& b : batcher.drain()) emit(std::move(b));
  };
  auto feed_impressions_through = [&](int64_t ts_ms) {
    while (next_impression < impression_records.size()) {
      ImpressionEvent e = decode_impression(impression_records[next_impression]);
      if (e.ts_ms > ts_ms) break;
      joiner.on_impression(e);
      tail.last_impression_ts = e.ts_ms;
      pump();
      next_impression += 1;
    }
  };

  for (const auto& record : reward_records) {
    const std::string type = record_type(record);
    if (type == "reward") {
      RewardEvent e = decode_reward(record);
      feed_impressions_through(e.ts_ms);
      joiner.on_reward(e);
      tail.last_reward_ts = e.ts_ms;
    } else if (type == "watermark") {
      const int64_t ts = decode_watermark(record);
      feed_impressions_through(ts);
      joiner.advance_watermark(ts);
      tail.last_reward_ts = ts;
    } else {
      fail(Errc::MalformedRecord, "unexpected " + type + " record in rewards log");
    }
    pump();
  }
  feed_impressions_through(std::numeric_limits<int64_t>::max());
  return tail;
}

}  // namespace

RewardPipeline::RewardPipeline(std::string logs_dir, const BanditConfig& config,
                               FlushPolicy policy, bool fsync)
    : config_(config),
      policy_(policy),
      log_(logs_dir, config, fsync),
      joiner_(config),
      batcher_(config.bandit_id, policy),
      batch_writer_(new RecordWriter(EventLog::batches_path(logs_dir, config.bandit_id), fsync)) {
  // The writers above already truncated any torn tails, so these reads see
  // exactly the records a replay would.
  const auto impressions = read_log(EventLog::impressions_path(logs_dir, config.bandit_id));
  const auto rewards = read_log(EventLog::rewards_path(logs_dir, config.bandit_id));
  if (impressions.empty() && rewards.empty()) return;

  const auto logged =
      static_cast<int64_t>(read_log(EventLog::batches_path(logs_dir, config.bandit_id)).size());
  const MergeTail tail = merge_logs(
      impressions, rewards, joiner_, batcher_, window_millis(config_), [&](TrainingBatch&& b) {
        // A crash can hit between the reward-log append and the batch-log
        // append; re-log exactly the flushes the old process never recorded.
        if (b.seq > logged) batch_writer_->append(encode_batch(b));
        out_.push_back(std::move(b));
      });
  log_.seed_ordering(tail.last_impression_ts, tail.last_reward_ts);
  last_event_ts_ = std::max({last_event_ts_, tail.last_impression_ts, tail.last_reward_ts});
}

void RewardPipeline::on_impression(const ImpressionEvent& e) {
  log_.append(e);
  joiner_.on_impression(e);
  last_event_ts_ = std::max(last_event_ts_, e.ts_ms);
  pump();
}

void RewardPipeline::on_reward(const RewardEvent& e) {
  log_.append(e);
  joiner_.on_reward(e);
  last_event_ts_ = std::max(last_event_ts_, e.ts_ms);
  pump();
}

void RewardPipeline::advance_watermark(int64_t ts_ms) {
  // Only log punctuation that moves the clock; no-ops would bloat the log.
  if (ts_ms <= joiner_.watermark()) return;
  log_.append_watermark(ts_ms);
  joiner_.advance_watermark(ts_ms);
  last_event_ts_ = std::max(last_event_ts_, ts_ms);
  pump();
}

void RewardPipeline::finish() {
  advance_watermark(last_event_ts_ + window_millis(config_) + policy_.max_wait_ms + 1);
}

void RewardPipeline::pump() {
  const int64_t window_ms = window_millis(config_);
  for (auto& ex : joiner_.drain_ready()) {
    const int64_t finalized_at = ex.impression_ts_ms + window_ms;
    batcher_.add(std::move(ex), finalized_at);
  }
  batcher_.advance(joiner_.watermark());
  for (auto& b : batcher_.drain()) {
    batch_writer_->append(encode_batch(b));
    out_.push_back(std::move(b));
  }
}

std::vector<TrainingBatch> RewardPipeline::take_batches() {
  std::vector<TrainingBatch> out;
  out.swap(out_);
  return out;
}

std::vector<TrainingBatch> replay_batches(const std::string& logs_dir, const BanditConfig& config,
                                          FlushPolicy policy) {
  const auto impression_records =
      read_log(EventLog::impressions_path(logs_dir, config.bandit_id));
  const auto reward_records = read_log(EventLog::rewards_path(logs_dir, config.bandit_id));

  Joiner joiner(config);
  Batcher batcher(config.bandit_id, policy);
  std::vector<TrainingBatch> out;
  merge_logs(impression_records, reward_records, joiner, batcher, window_millis(config),
             [&](TrainingBatch&& b) { out.push_back(std::move(b)); });
  return out;
}

}  // namespace bandit
