#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

#include "bandit/pipeline.hpp"
#include "bandit/sampler.hpp"
#include "bandit/store.hpp"
#include "bandit/trainer.hpp"

namespace httplib {
class Server;
}

namespace bandit {

struct ServiceOptions {
  int port = 8080;
  SamplerOptions sampler;
  FlushPolicy flush;
  bool fsync = false;
  std::size_t trainer_workers = 1;
  std::chrono::milliseconds punctuate_period{1000};
  uint64_t seed = 0;  // 0 draws one from the system entropy source

  // Applies SAMPLER_PORT, SAMPLER_REFRESH_SECS, SAMPLER_TTL_SECS and
  // SAMPLER_CACHE_CAP on top of the defaults.
  static ServiceOptions from_env();
};

// The full serving stack over one data directory: store/ for parameters,
// logs/ for the event pipeline. Startup replays the logs, so pending joins
// and the batch sequence survive restarts. Decisions are served from
// snapshots a background loop refreshes; trainers commit through the store's
// CAS and never touch the request path.
class PlatformService {
 public:
  PlatformService(std::string data_dir, ServiceOptions options);
  ~PlatformService();

  // Binds and serves until stop(). Returns the bound port (options.port 0
  // picks a free one) through started(), which blocks until the socket is
  // listening.
  void start();
  int started();
  void stop();

  // Request-path entry points, exposed for in-process tests; the HTTP layer
  // is a thin JSON shim over these.
  BanditStore& store() { return store_; }
  Sampler& sampler() { return sampler_; }
  void record_reward(const RewardEvent& e);
  std::string metrics_text();

 private:
  struct PipelineSlot {
    std::mutex mu;
    std::unique_ptr<RewardPipeline> pipeline;
  };

  void wire_routes();
  void punctuate_loop();
  void refresh_loop();
  PipelineSlot& pipeline_of(const std::string& bandit_id);
  void pump_slot(PipelineSlot& slot);
  void bootstrap();

  std::string data_dir_;
  ServiceOptions options_;
  SystemClock clock_;
  BanditStore store_;
  Sampler sampler_;
  TrainerPool trainers_;

  std::mutex pipelines_mu_;
  std::unordered_map<std::string, std::unique_ptr<PipelineSlot>> pipelines_;

  std::unique_ptr<httplib::Server> server_;
  std::thread serve_thread_;
  std::thread punctuate_thread_;
  std::thread refresh_thread_;
  std::mutex lifecycle_mu_;
  std::condition_variable lifecycle_cv_;
  int bound_port_ = -2;  // -2 unset, -1 bind failure
  bool stopping_ = false;
  bool started_once_ = false;
};

}  // namespace bandit
