#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "bandit/clock.hpp"
#include "bandit/events.hpp"
#include "bandit/policy.hpp"
#include "bandit/store.hpp"

namespace bandit {

struct SamplerOptions {
  std::chrono::seconds session_ttl{30 * 60};
  std::size_t cache_capacity = 100'000;
  std::chrono::seconds refresh_period{10};
  std::ptrdiff_t max_concurrent = 256;
};

struct Decision {
  std::string bandit_id;
  std::string request_id;
  std::vector<std::string> arms;
  int64_t param_version = 0;
  int64_t served_at_ms = 0;
  std::optional<double> probability;
};

struct SamplerCounters {
  int64_t samples = 0;
  int64_t cache_hits = 0;
  int64_t cache_misses = 0;
  int64_t overload_rejections = 0;
  int64_t refresh_failures = 0;
};

// Serves decisions from in-memory parameter snapshots. Snapshots refresh from
// the store out of band, so the request path never blocks on it (except to
// lazily load a bandit it has not seen). A session cache pins (bandit,
// session) to its first decision for one ttl, which keeps repeat calls
// consistent across concurrent parameter swaps.
class Sampler {
 public:
  Sampler(BanditStore* store, SamplerOptions options, Clock* clock, uint64_t seed);

  // Impressions for fresh decisions land here (cache hits re-serve the
  // original impression instead of emitting another).
  void set_impression_sink(std::function<void(const ImpressionEvent&)> sink);

  Decision sample(const std::string& bandit_id, const std::string& session_id,
                  const RawContext& raw);

  // Pulls the latest config and parameters for one bandit. Keeps the old
  // snapshot and throws RefreshFailed if the stored document will not decode.
  void refresh(const std::string& bandit_id);
  // Refreshes every loaded bandit; returns how many refreshes failed.
  std::size_t refresh_all();

  SamplerCounters counters() const;
  // Seeds the request-id counter, so restarted services keep ids unique.
  void seed_request_counter(int64_t start);

 private:
  struct Model {
    BanditConfig config;
    int64_t config_version = 0;
    int64_t param_version = 0;
    PolicyState policy;
    std::shared_ptr<const ArmIndexer> indexer;
  };

  struct CacheEntry {
    std::string key;
    Decision decision;
    int64_t expires_at_ms = 0;
  };
  using CacheList = std::list<CacheEntry>;

  std::shared_ptr<const Model> model_of(const std::string& bandit_id);
  std::shared_ptr<const Model> build_model(const std::string& bandit_id) const;
  void publish_model(const std::string& bandit_id, std::shared_ptr<const Model> model);
  std::optional<Decision> cache_lookup(const std::string& key, int64_t now_ms);
  void cache_store(const std::string& key, const Decision& d, int64_t now_ms);

  BanditStore* store_;
  SamplerOptions options_;
  Clock* clock_;

  mutable std::mutex models_mu_;
  std::unordered_map<std::string, std::shared_ptr<const Model>> models_;

  static constexpr std::size_t kStripes = 64;
  std::array<std::mutex, kStripes> stripes_;

  std::mutex cache_mu_;
  CacheList cache_;  // front = most recent
  std::unordered_map<std::string, CacheList::iterator> cache_index_;

  std::mutex rng_mu_;
  Rng rng_;

  std::counting_semaphore<> slots_;

  mutable std::mutex counters_mu_;
  SamplerCounters counters_;
  int64_t request_counter_ = 0;

  std::function<void(const ImpressionEvent&)> sink_;
};

}  // namespace bandit
