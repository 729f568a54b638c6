#include "bandit/trainer.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <utility>

#include "bandit/errors.hpp"
#include "bandit/policy_codec.hpp"

namespace bandit {

namespace {

void check_example(const BanditConfig& config, const TrainingExample& ex) {
  const std::size_t objectives = config.reward_spec.objectives;
  if (ex.reward.size() != objectives) {
    fail(Errc::LengthMismatch, "example carries " + std::to_string(ex.reward.size()) +
                                   " reward values, spec has " + std::to_string(objectives));
  }
  for (double v : ex.reward) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "example reward is not finite");
  }
  const std::size_t expected_arms =
      config.algorithm == Algorithm::CascadeTS ? config.hyperparameters.ranking_k : 1;
  if (ex.arms.size() != expected_arms) {
    fail(Errc::SchemaViolation, "example carries " + std::to_string(ex.arms.size()) +
                                    " arms, expected " + std::to_string(expected_arms));
  }
}

void check_context(const TrainingExample& ex, std::size_t d) {
  if (ex.context.size() != static_cast<Eigen::Index>(d)) {
    fail(Errc::DimensionMismatch, "example context has " + std::to_string(ex.context.size()) +
                                      " features, model expects " + std::to_string(d));
  }
  if (!ex.context.allFinite()) fail(Errc::NonFiniteInput, "example context is not finite");
}

double binary_label(double v) {
  if (v != 0.0 && v != 1.0) fail(Errc::NonBinaryLabel, "logistic label must be 0 or 1");
  return v;
}

// Walks the batch, letting per-example validation poison individual examples.
// handle() must not throw once validate() has passed.
template <typename Validate, typename Handle>
void for_each_example(const TrainingBatch& batch, ApplyResult& result, Validate validate,
                      Handle handle) {
  for (const auto& ex : batch.examples) {
    try {
      validate(ex);
    } catch (const BanditError& err) {
      if (err.code() == Errc::NoConvergence) throw;
      result.poisoned_examples += 1;
      continue;
    }
    handle(ex);
    result.applied_examples += 1;
  }
}

}  // namespace

ApplyResult apply_batch(const BanditConfig& config, PolicyState state,
                        const TrainingBatch& batch) {
  if (batch.bandit_id != config.bandit_id) {
    fail(Errc::UnknownBandit,
         "batch for bandit " + batch.bandit_id + " routed to " + config.bandit_id);
  }
  ApplyResult result;
  ArmIndexer indexer(config.arm_space);
  const auto& hp = config.hyperparameters;

  if (auto* eg = std::get_if<EGState>(&state.state)) {
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
        },
        [&](const TrainingExample& ex) {
          *eg = eg_update(std::move(*eg), indexer.index_of(ex.arms[0]), ex.reward[0]);
        });
  } else if (auto* beta = std::get_if<BetaState>(&state.state)) {
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          binary_label(ex.reward[0]);
        },
        [&](const TrainingExample& ex) {
          *beta = beta_update(std::move(*beta), indexer.index_of(ex.arms[0]), ex.reward[0]);
        });
  } else if (auto* exp3 = std::get_if<Exp3State>(&state.state)) {
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          if (!ex.probability) {
            // Importance weighting needs the logged draw probability.
            fail(Errc::ZeroProbability, "example lacks a draw probability");
          }
          if (!(*ex.probability > 0.0) || !std::isfinite(*ex.probability)) {
            fail(Errc::ZeroProbability, "draw probability must be positive");
          }
          if (ex.reward[0] < 0.0 || ex.reward[0] > 1.0) {
            fail(Errc::RewardOutOfRange, "exp3 reward must lie in [0, 1]");
          }
        },
        [&](const TrainingExample& ex) {
          *exp3 = exp3_update(std::move(*exp3), indexer.index_of(ex.arms[0]), ex.reward[0],
                              *ex.probability, hp.exp3_gamma);
        });
  } else if (auto* cascade = std::get_if<CascadeState>(&state.state)) {
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          for (const auto& arm : ex.arms) indexer.index_of(arm);
          if (ex.click_position && *ex.click_position >= ex.arms.size()) {
            fail(Errc::PositionOutOfRange, "click position past the shown list");
          }
        },
        [&](const TrainingExample& ex) {
          std::vector<std::size_t> shown;
          shown.reserve(ex.arms.size());
          for (const auto& arm : ex.arms) shown.push_back(indexer.index_of(arm));
          *cascade = cascade_update(std::move(*cascade), shown, ex.click_position);
        });
  } else if (auto* rls = std::get_if<RLSState>(&state.state)) {
    const std::size_t d = rls->arms.empty() ? 0 : static_cast<std::size_t>(rls->arms[0].m.size());
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          check_context(ex, d);
        },
        [&](const TrainingExample& ex) {
          auto& model = rls->arms[indexer.index_of(ex.arms[0])];
          model = rls_update(std::move(model), ex.context, ex.reward[0]);
        });
  } else if (auto* blr = std::get_if<BLRState>(&state.state)) {
    // One mode-finding pass per arm, not per example: batch the rows.
    const std::size_t d = blr->arms.empty() ? 0 : static_cast<std::size_t>(blr->arms[0].m.size());
    std::map<std::size_t, std::vector<Observation>> groups;
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          check_context(ex, d);
          binary_label(ex.reward[0]);
        },
        [&](const TrainingExample& ex) {
          groups[indexer.index_of(ex.arms[0])].push_back(Observation{ex.context, ex.reward[0]});
        });
    for (auto& [arm, rows] : groups) {
      blr->arms[arm] = blr_update(std::move(blr->arms[arm]), rows);
    }
  } else if (auto* shared_g = std::get_if<LinearGaussian>(&state.state)) {
    LinearFeatureMap map(context_dimension(config.context_schema),
                         config.arm_space.as_slotted());
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          check_context(ex, map.context_dim());
        },
        [&](const TrainingExample& ex) {
          const auto assignment = indexer.assignment_of(indexer.index_of(ex.arms[0]));
          *shared_g =
              rls_update(std::move(*shared_g), map.combine(ex.context, assignment), ex.reward[0]);
        });
  } else if (auto* shared_l = std::get_if<LinearLogistic>(&state.state)) {
    LinearFeatureMap map(context_dimension(config.context_schema),
                         config.arm_space.as_slotted());
    std::vector<Observation> rows;
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          check_context(ex, map.context_dim());
          binary_label(ex.reward[0]);
        },
        [&](const TrainingExample& ex) {
          const auto assignment = indexer.assignment_of(indexer.index_of(ex.arms[0]));
          rows.push_back(Observation{map.combine(ex.context, assignment), ex.reward[0]});
        });
    if (!rows.empty()) *shared_l = blr_update(std::move(*shared_l), rows);
  } else if (auto* multi = std::get_if<MultiRLSState>(&state.state)) {
    const std::size_t d = multi->objectives.empty() || multi->objectives[0].arms.empty()
                              ? 0
                              : static_cast<std::size_t>(multi->objectives[0].arms[0].m.size());
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          check_context(ex, d);
        },
        [&](const TrainingExample& ex) {
          const std::size_t arm = indexer.index_of(ex.arms[0]);
          for (std::size_t j = 0; j < multi->objectives.size(); ++j) {
            auto& model = multi->objectives[j].arms[arm];
            model = rls_update(std::move(model), ex.context, ex.reward[j]);
          }
        });
  } else if (auto* multi_shared = std::get_if<MultiSharedState>(&state.state)) {
    LinearFeatureMap map(context_dimension(config.context_schema),
                         config.arm_space.as_slotted());
    for_each_example(
        batch, result,
        [&](const TrainingExample& ex) {
          check_example(config, ex);
          indexer.index_of(ex.arms[0]);
          check_context(ex, map.context_dim());
        },
        [&](const TrainingExample& ex) {
          const auto assignment = indexer.assignment_of(indexer.index_of(ex.arms[0]));
          const Eigen::VectorXd phi = map.combine(ex.context, assignment);
          for (std::size_t j = 0; j < multi_shared->objectives.size(); ++j) {
            auto& model = multi_shared->objectives[j];
            model = rls_update(std::move(model), phi, ex.reward[j]);
          }
        });
  } else {
    fail(Errc::AlgorithmMismatch, "no update rule for this state kind");
  }

  result.state = std::move(state);
  result.state.update_batches += 1;
  return result;
}

TrainOutcome Trainer::process(const TrainingBatch& batch) { return attempt(batch, true); }

TrainOutcome Trainer::attempt(const TrainingBatch& batch, bool may_retry) {
  const ParamDocument doc = store_->get_params(batch.bandit_id);
  if (batch.seq <= doc.train_seq) {
    std::lock_guard<std::mutex> lk(mu_);
    counters_.skipped_replay += 1;
    return TrainOutcome::SkippedReplay;
  }
  const BanditConfig config = store_->get_config(batch.bandit_id);
  if (config.frozen()) {
    std::lock_guard<std::mutex> lk(mu_);
    counters_.dropped_frozen += 1;
    return TrainOutcome::DroppedFrozen;
  }

  PolicyState state = decode_policy(config, doc.state_json);
  ApplyResult result = apply_batch(config, std::move(state), batch);
  const std::string encoded = encode_policy(config, result.state);
  const CasOutcome cas = store_->cas_put_params(batch.bandit_id, doc.version, encoded, batch.seq);

  if (cas.committed) {
    std::lock_guard<std::mutex> lk(mu_);
    counters_.applied_batches += 1;
    counters_.poisoned_examples += result.poisoned_examples;
    return TrainOutcome::Applied;
  }

  {
    std::lock_guard<std::mutex> lk(mu_);
    counters_.cas_conflicts += 1;
  }
  switch (cas.conflict) {
    case ConflictReason::Frozen: {
      std::lock_guard<std::mutex> lk(mu_);
      counters_.dropped_frozen += 1;
      return TrainOutcome::DroppedFrozen;
    }
    case ConflictReason::StaleTrainSeq: {
      // Another writer already folded this seq in.
      std::lock_guard<std::mutex> lk(mu_);
      counters_.skipped_replay += 1;
      return TrainOutcome::SkippedReplay;
    }
    case ConflictReason::VersionMismatch:
      if (may_retry) return attempt(batch, false);
      fail(Errc::Conflict, "parameter version moved twice while training batch " +
                               std::to_string(batch.seq) + " for " + batch.bandit_id);
    case ConflictReason::None:
      break;
  }
  fail(Errc::Conflict, "unexpected CAS outcome");
}

TrainerCounters Trainer::counters() const {
  std::lock_guard<std::mutex> lk(mu_);
  return counters_;
}

TrainerPool::TrainerPool(BanditStore* store, std::size_t workers) : trainer_(store) {
  if (workers == 0) workers = 1;
  lanes_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) lanes_.push_back(std::make_unique<Lane>());
  threads_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    threads_.emplace_back([this, i] { worker(*lanes_[i]); });
  }
}

TrainerPool::~TrainerPool() { stop(); }

void TrainerPool::submit(TrainingBatch batch) {
  Lane& lane = *lanes_[std::hash<std::string>{}(batch.bandit_id) % lanes_.size()];
  {
    std::lock_guard<std::mutex> lk(lane.mu);
    lane.queue.push_back(std::move(batch));
    lane.in_flight += 1;
  }
  lane.cv.notify_one();
}

void TrainerPool::worker(Lane& lane) {
  for (;;) {
    TrainingBatch batch;
    {
      std::unique_lock<std::mutex> lk(lane.mu);
      lane.cv.wait(lk, [&] { return stopping_ || !lane.queue.empty(); });
      if (lane.queue.empty()) return;  // stopping and drained
      batch = std::move(lane.queue.front());
      lane.queue.pop_front();
    }
    try {
      trainer_.process(batch);
    } catch (const BanditError&) {
      // A batch the trainer cannot apply (bandit deleted, persistent
      // conflict) must not kill the worker.
      std::lock_guard<std::mutex> lk(failed_mu_);
      failed_ += 1;
    }
    {
      std::lock_guard<std::mutex> lk(lane.mu);
      lane.in_flight -= 1;
    }
    lane.cv.notify_all();
  }
}

void TrainerPool::drain() {
  for (auto& lane_ptr : lanes_) {
    Lane& lane = *lane_ptr;
    std::unique_lock<std::mutex> lk(lane.mu);
    lane.cv.wait(lk, [&] { return lane.in_flight == 0; });
  }
}

void TrainerPool::stop() {
  bool expected = false;
  {
    // stopping_ is read under each lane's mutex in the wait predicate, so
    // flip it while holding all of them.
    for (auto& lane : lanes_) lane->mu.lock();
    expected = stopping_;
    stopping_ = true;
    for (auto& lane : lanes_) lane->mu.unlock();
  }
  if (expected) return;
  for (auto& lane : lanes_) lane->cv.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

}  // namespace bandit
