#include "bandit/sampler.hpp"

#include <utility>

#include "bandit/errors.hpp"
#include "bandit/policy_codec.hpp"

namespace bandit {

namespace {

std::string session_key(const std::string& bandit_id, const std::string& session_id) {
  std::string key;
  key.reserve(bandit_id.size() + session_id.size() + 1);
  key += bandit_id;
  key += '\0';
  key += session_id;
  return key;
}

struct SlotGuard {
  std::counting_semaphore<>& sem;
  ~SlotGuard() { sem.release(); }
};

}  // namespace

Sampler::Sampler(BanditStore* store, SamplerOptions options, Clock* clock, uint64_t seed)
    : store_(store),
      options_(options),
      clock_(clock),
      rng_(seed),
      slots_(options.max_concurrent) {}

void Sampler::set_impression_sink(std::function<void(const ImpressionEvent&)> sink) {
  sink_ = std::move(sink);
}

void Sampler::seed_request_counter(int64_t start) {
  std::lock_guard<std::mutex> lk(counters_mu_);
  request_counter_ = start;
}

std::shared_ptr<const Sampler::Model> Sampler::build_model(const std::string& bandit_id) const {
  auto model = std::make_shared<Model>();
  const BanditInfo info = store_->get_info(bandit_id);
  const ParamDocument doc = store_->get_params(bandit_id);
  model->config = info.config;
  model->config_version = info.config_version;
  model->param_version = doc.version;
  model->policy = decode_policy(info.config, doc.state_json);
  model->indexer = std::make_shared<const ArmIndexer>(info.config.arm_space);
  return model;
}

std::shared_ptr<const Sampler::Model> Sampler::model_of(const std::string& bandit_id) {
  {
    std::lock_guard<std::mutex> lk(models_mu_);
    auto it = models_.find(bandit_id);
    if (it != models_.end()) return it->second;
  }
  // First sight of this bandit: load synchronously, then serve from memory.
  auto model = build_model(bandit_id);
  publish_model(bandit_id, model);
  return model;
}

void Sampler::publish_model(const std::string& bandit_id, std::shared_ptr<const Model> model) {
  std::lock_guard<std::mutex> lk(models_mu_);
  models_[bandit_id] = std::move(model);
}

void Sampler::refresh(const std::string& bandit_id) {
  std::shared_ptr<const Model> current;
  {
    std::lock_guard<std::mutex> lk(models_mu_);
    auto it = models_.find(bandit_id);
    if (it == models_.end()) return;  // never served, nothing to refresh
    current = it->second;
  }
  const BanditInfo info = store_->get_info(bandit_id);
  if (info.config_version == current->config_version &&
      info.param_version == current->param_version) {
    return;
  }
  try {
    publish_model(bandit_id, build_model(bandit_id));
  } catch (const BanditError& err) {
    {
      std::lock_guard<std::mutex> lk(counters_mu_);
      counters_.refresh_failures += 1;
    }
    // The previous snapshot stays live; serving stale beats serving nothing.
    fail(Errc::RefreshFailed, "refresh of " + bandit_id + " failed: " + err.what());
  }
}

std::size_t Sampler::refresh_all() {
  std::vector<std::string> ids;
  {
    std::lock_guard<std::mutex> lk(models_mu_);
    ids.reserve(models_.size());
    for (const auto& [id, model] : models_) {
      (void)model;
      ids.push_back(id);
    }
  }
  std::size_t failures = 0;
  for (const auto& id : ids) {
    try {
      refresh(id);
    } catch (const BanditError&) {
      failures += 1;
    }
  }
  return failures;
}

std::optional<Decision> Sampler::cache_lookup(const std::string& key, int64_t now_ms) {
  std::lock_guard<std::mutex> lk(cache_mu_);
  auto it = cache_index_.find(key);
  if (it == cache_index_.end()) return std::nullopt;
  if (it->second->expires_at_ms <= now_ms) {
    cache_.erase(it->second);
    cache_index_.erase(it);
    return std::nullopt;
  }
  // Recency applies to eviction only; the expiry stays fixed at first serve
  // so a busy session cannot pin stale parameters forever.
  cache_.splice(cache_.begin(), cache_, it->second);
  return it->second->decision;
}

void Sampler::cache_store(const std::string& key, const Decision& d, int64_t now_ms) {
  std::lock_guard<std::mutex> lk(cache_mu_);
  auto it = cache_index_.find(key);
  if (it != cache_index_.end()) {
    cache_.erase(it->second);
    cache_index_.erase(it);
  }
  cache_.push_front(CacheEntry{
      key, d, now_ms + std::chrono::milliseconds(options_.session_ttl).count()});
  cache_index_[key] = cache_.begin();
  while (cache_.size() > options_.cache_capacity) {
    cache_index_.erase(cache_.back().key);
    cache_.pop_back();
  }
}

Decision Sampler::sample(const std::string& bandit_id, const std::string& session_id,
                         const RawContext& raw) {
  if (!slots_.try_acquire()) {
    std::lock_guard<std::mutex> lk(counters_mu_);
    counters_.overload_rejections += 1;
    fail(Errc::Overloaded, "sampler is at its concurrency limit");
  }
  SlotGuard guard{slots_};

  const int64_t now = clock_->now_ms();
  auto model = model_of(bandit_id);

  const std::string key = session_key(bandit_id, session_id);
  // One stripe per (bandit, session) hash: two racing calls for the same
  // session serialize here, so exactly one of them populates the cache.
  std::lock_guard<std::mutex> stripe(
      stripes_[std::hash<std::string>{}(key) % kStripes]);

  if (auto hit = cache_lookup(key, now)) {
    std::lock_guard<std::mutex> lk(counters_mu_);
    counters_.samples += 1;
    counters_.cache_hits += 1;
    return *hit;
  }

  const ContextVector x = encode_context(model->config.context_schema, raw);
  SampleOutcome outcome;
  {
    std::lock_guard<std::mutex> lk(rng_mu_);
    outcome = sample_policy(model->config, model->policy, x, rng_);
  }

  Decision d;
  d.bandit_id = bandit_id;
  d.param_version = model->param_version;
  d.served_at_ms = now;
  d.probability = outcome.probability;
  d.arms.reserve(outcome.arms.size());
  for (std::size_t index : outcome.arms) d.arms.push_back(model->indexer->id_of(index));
  {
    std::lock_guard<std::mutex> lk(counters_mu_);
    request_counter_ += 1;
    d.request_id = "r" + std::to_string(request_counter_);
    counters_.samples += 1;
    counters_.cache_misses += 1;
  }

  cache_store(key, d, now);

  if (sink_) {
    ImpressionEvent e;
    e.bandit_id = bandit_id;
    e.request_id = d.request_id;
    e.session_id = session_id;
    e.arms = d.arms;
    e.context = x;
    e.param_version = d.param_version;
    e.ts_ms = now;
    e.probability = d.probability;
    sink_(e);
  }
  return d;
}

SamplerCounters Sampler::counters() const {
  std::lock_guard<std::mutex> lk(counters_mu_);
  return counters_;
}

}  // namespace bandit
