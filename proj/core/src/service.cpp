#define CPPHTTPLIB_THREAD_POOL_COUNT 8
#include "bandit/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <random>
#include <sstream>
#include <utility>

#include "bandit/errors.hpp"
#include "bandit/config_json.hpp"
#include "bandit/event_codec.hpp"

namespace bandit {

namespace {

using nlohmann::json;

int status_of(Errc code) {
  switch (code) {
    case Errc::UnknownBandit:
      return 404;
    case Errc::ImmutableFieldChanged:
    case Errc::Conflict:
      return 409;
    case Errc::Overloaded:
      return 503;
    default:
      return 400;
  }
}

void reply_error(httplib::Response& res, Errc code, const std::string& message) {
  json body;
  body["error"] = message;
  body["code"] = errc_name(code);
  res.status = status_of(code);
  res.set_content(body.dump(), "application/json");
}

void reply_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs a handler, mapping thrown BanditErrors onto HTTP statuses so each
// route only writes its success path.
template <typename Fn>
void guarded(httplib::Response& res, Fn fn) {
  try {
    fn();
  } catch (const BanditError& err) {
    reply_error(res, err.code(), err.what());
  } catch (const json::exception& err) {
    reply_error(res, Errc::MalformedRecord, std::string("bad request body: ") + err.what());
  } catch (const std::exception& err) {
    json body;
    body["error"] = err.what();
    res.status = 500;
    res.set_content(body.dump(), "application/json");
  }
}

json parse_body(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) fail(Errc::MalformedRecord, "request body is not valid JSON");
  return doc;
}

int64_t env_int(const char* name, int64_t fallback) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const long long v = std::strtoll(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 0) {
    fail(Errc::InvalidConfig, std::string(name) + " must be a non-negative integer, got '" +
                                  raw + "'");
  }
  return v;
}

}  // namespace

ServiceOptions ServiceOptions::from_env() {
  ServiceOptions o;
  o.port = static_cast<int>(env_int("SAMPLER_PORT", o.port));
  o.sampler.refresh_period =
      std::chrono::seconds(env_int("SAMPLER_REFRESH_SECS", o.sampler.refresh_period.count()));
  o.sampler.session_ttl =
      std::chrono::seconds(env_int("SAMPLER_TTL_SECS", o.sampler.session_ttl.count()));
  o.sampler.cache_capacity = static_cast<std::size_t>(
      env_int("SAMPLER_CACHE_CAP", static_cast<int64_t>(o.sampler.cache_capacity)));
  return o;
}

PlatformService::PlatformService(std::string data_dir, ServiceOptions options)
    : data_dir_(std::move(data_dir)),
      options_(options),
      store_(data_dir_ + "/store", StoreOptions{options.fsync, 1024}, &clock_),
      sampler_(&store_, options.sampler, &clock_,
               options.seed != 0 ? options.seed : std::random_device{}()),
      trainers_(&store_, options.trainer_workers),
      server_(new httplib::Server) {
  sampler_.set_impression_sink([this](const ImpressionEvent& e) {
    PipelineSlot& slot = pipeline_of(e.bandit_id);
    std::lock_guard<std::mutex> lk(slot.mu);
    slot.pipeline->on_impression(e);
    pump_slot(slot);
  });
  bootstrap();
  wire_routes();
}

PlatformService::~PlatformService() { stop(); }

void PlatformService::bootstrap() {
  // Reopening the pipelines replays their logs: pending joins come back, the
  // batch sequence resumes, and every re-derived batch goes to the trainer,
  // whose seq guard skips the ones already folded in.
  int64_t impressions = 0;
  for (const auto& id : store_.list_bandits()) {
    PipelineSlot& slot = pipeline_of(id);
    std::lock_guard<std::mutex> lk(slot.mu);
    impressions += slot.pipeline->counters().impressions;
    pump_slot(slot);
  }
  // Request ids are "r<n>" with one fresh id per logged impression, so the
  // impression count is exactly how many ids have been handed out.
  sampler_.seed_request_counter(impressions);
}

PlatformService::PipelineSlot& PlatformService::pipeline_of(const std::string& bandit_id) {
  std::lock_guard<std::mutex> lk(pipelines_mu_);
  auto it = pipelines_.find(bandit_id);
  if (it == pipelines_.end()) {
    const BanditConfig config = store_.get_config(bandit_id);  // throws UnknownBandit
    auto slot = std::make_unique<PipelineSlot>();
    slot->pipeline = std::make_unique<RewardPipeline>(data_dir_ + "/logs", config,
                                                      options_.flush, options_.fsync);
    it = pipelines_.emplace(bandit_id, std::move(slot)).first;
  }
  return *it->second;
}

void PlatformService::pump_slot(PipelineSlot& slot) {
  for (auto& batch : slot.pipeline->take_batches()) trainers_.submit(std::move(batch));
}

void PlatformService::record_reward(const RewardEvent& e) {
  PipelineSlot& slot = pipeline_of(e.bandit_id);
  std::lock_guard<std::mutex> lk(slot.mu);
  slot.pipeline->on_reward(e);
  pump_slot(slot);
}

std::string PlatformService::metrics_text() {
  const SamplerCounters s = sampler_.counters();
  const TrainerCounters t = trainers_.counters();
  JoinCounters joined;
  int64_t batches = 0;
  {
    std::lock_guard<std::mutex> lk(pipelines_mu_);
    for (auto& [id, slot] : pipelines_) {
      (void)id;
      std::lock_guard<std::mutex> slk(slot->mu);
      const JoinCounters& c = slot->pipeline->counters();
      joined.impressions += c.impressions;
      joined.rewards += c.rewards;
      joined.matched += c.matched;
      joined.expired_defaulted += c.expired_defaulted;
      joined.expired_dropped += c.expired_dropped;
      joined.discarded_rewards += c.discarded_rewards;
      joined.examples += c.examples;
      batches += slot->pipeline->batches_emitted();
    }
  }
  std::ostringstream out;
  out << "samples_total " << s.samples << "\n";
  out << "sample_cache_hits_total " << s.cache_hits << "\n";
  out << "sample_cache_misses_total " << s.cache_misses << "\n";
  out << "overload_rejections_total " << s.overload_rejections << "\n";
  out << "refresh_failures_total " << s.refresh_failures << "\n";
  out << "impressions_total " << joined.impressions << "\n";
  out << "rewards_total " << joined.rewards << "\n";
  out << "rewards_matched_total " << joined.matched << "\n";
  out << "impressions_expired_defaulted_total " << joined.expired_defaulted << "\n";
  out << "impressions_expired_dropped_total " << joined.expired_dropped << "\n";
  out << "rewards_discarded_total " << joined.discarded_rewards << "\n";
  out << "training_examples_total " << joined.examples << "\n";
  out << "training_batches_total " << batches << "\n";
  out << "trainer_applied_batches_total " << t.applied_batches << "\n";
  out << "trainer_poisoned_examples_total " << t.poisoned_examples << "\n";
  out << "trainer_skipped_replay_total " << t.skipped_replay << "\n";
  out << "trainer_dropped_frozen_total " << t.dropped_frozen << "\n";
  out << "trainer_cas_conflicts_total " << t.cas_conflicts << "\n";
  out << "trainer_failed_batches_total " << trainers_.failed_batches() << "\n";
  return out.str();
}

void PlatformService::wire_routes() {
  httplib::Server& svr = *server_;

  svr.Post("/v1/bandits", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const BanditConfig config = config_from_json(req.body);
      store_.put_config(config);
      const BanditInfo info = store_.get_info(config.bandit_id);
      try {
        sampler_.refresh(config.bandit_id);
      } catch (const BanditError&) {
        // Snapshot refresh is best-effort here; the refresh loop retries.
      }
      json body;
      body["bandit_id"] = config.bandit_id;
      body["config_version"] = info.config_version;
      body["param_version"] = info.param_version;
      reply_json(res, body);
    });
  });

  svr.Get("/v1/bandits", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json body;
      body["bandits"] = store_.list_bandits();
      reply_json(res, body);
    });
  });

  svr.Get("/v1/bandits/:id", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const BanditInfo info = store_.get_info(req.path_params.at("id"));
      json body;
      body["bandit_id"] = info.config.bandit_id;
      body["config"] = json::parse(config_to_json(info.config));
      body["config_version"] = info.config_version;
      body["param_version"] = info.param_version;
      body["train_seq"] = info.train_seq;
      reply_json(res, body);
    });
  });

  svr.Post("/v1/bandits/:id/freeze",
           [this](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const std::string id = req.path_params.at("id");
               json body;
               body["bandit_id"] = id;
               body["status"] = "frozen";
               try {
                 body["config_version"] = store_.freeze(id);
               } catch (const BanditError& err) {
                 if (err.code() != Errc::AlreadyFrozen) throw;
                 body["config_version"] = store_.get_info(id).config_version;
                 body["note"] = "already frozen";
               }
               try {
                 sampler_.refresh(id);
               } catch (const BanditError&) {
               }
               reply_json(res, body);
             });
           });

  svr.Post("/v1/bandits/:id/sample",
           [this](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const std::string id = req.path_params.at("id");
               const json doc = parse_body(req.body);
               if (!doc.is_object() || !doc.contains("session_id") ||
                   !doc["session_id"].is_string()) {
                 fail(Errc::SchemaViolation, "body needs a string session_id");
               }
               RawContext raw;
               if (doc.contains("context")) {
                 if (!doc["context"].is_object()) {
                   fail(Errc::SchemaViolation, "context must be an object of numbers");
                 }
                 for (const auto& [key, value] : doc["context"].items()) {
                   if (!value.is_number()) {
                     fail(Errc::SchemaViolation, "context field '" + key + "' is not a number");
                   }
                   raw[key] = value.get<double>();
                 }
               }
               const Decision d = sampler_.sample(id, doc["session_id"].get<std::string>(), raw);
               json body;
               body["bandit_id"] = d.bandit_id;
               body["request_id"] = d.request_id;
               body["arms"] = d.arms;
               body["param_version"] = d.param_version;
               if (d.probability) body["probability"] = *d.probability;
               reply_json(res, body);
             });
           });

  svr.Post("/v1/bandits/:id/reward",
           [this](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const json doc = parse_body(req.body);
               if (!doc.is_object() || !doc.contains("request_id") ||
                   !doc["request_id"].is_string()) {
                 fail(Errc::SchemaViolation, "body needs a string request_id");
               }
               if (!doc.contains("values") || !doc["values"].is_array()) {
                 fail(Errc::SchemaViolation, "body needs a values array");
               }
               RewardEvent e;
               e.bandit_id = req.path_params.at("id");
               e.request_id = doc["request_id"].get<std::string>();
               for (const auto& v : doc["values"]) {
                 if (!v.is_number()) fail(Errc::SchemaViolation, "values must be numbers");
                 e.values.push_back(v.get<double>());
               }
               if (doc.contains("click_position")) {
                 e.click_position = doc["click_position"].get<std::size_t>();
               }
               e.ts_ms = clock_.now_ms();  // arrival time stamps the event
               record_reward(e);
               json body;
               body["accepted"] = true;
               body["request_id"] = e.request_id;
               reply_json(res, body, 202);
             });
           });

  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  svr.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { res.set_content(metrics_text(), "text/plain"); });
  });
}

void PlatformService::start() {
  {
    std::lock_guard<std::mutex> lk(lifecycle_mu_);
    if (started_once_) return;
    started_once_ = true;
  }
  serve_thread_ = std::thread([this] {
    int port = options_.port;
    if (port == 0) {
      port = server_->bind_to_any_port("0.0.0.0");
    } else if (!server_->bind_to_port("0.0.0.0", port)) {
      port = -1;
    }
    {
      std::lock_guard<std::mutex> lk(lifecycle_mu_);
      bound_port_ = port;
    }
    lifecycle_cv_.notify_all();
    if (port > 0) server_->listen_after_bind();
  });
  punctuate_thread_ = std::thread([this] { punctuate_loop(); });
  refresh_thread_ = std::thread([this] { refresh_loop(); });
}

int PlatformService::started() {
  std::unique_lock<std::mutex> lk(lifecycle_mu_);
  lifecycle_cv_.wait(lk, [&] { return bound_port_ != -2 || !started_once_; });
  if (bound_port_ <= 0) fail(Errc::IoError, "could not bind the service port");
  // The accept loop starts just after binding; wait until it answers.
  lk.unlock();
  httplib::Client probe("127.0.0.1", bound_port_);
  probe.set_connection_timeout(2, 0);
  for (int i = 0; i < 200; ++i) {
    if (auto r = probe.Get("/healthz"); r && r->status == 200) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return bound_port_;
}

void PlatformService::punctuate_loop() {
  std::unique_lock<std::mutex> lk(lifecycle_mu_);
  while (!stopping_) {
    lifecycle_cv_.wait_for(lk, options_.punctuate_period, [&] { return stopping_; });
    if (stopping_) return;
    lk.unlock();
    const int64_t now = clock_.now_ms();
    std::vector<PipelineSlot*> slots;
    {
      std::lock_guard<std::mutex> plk(pipelines_mu_);
      slots.reserve(pipelines_.size());
      for (auto& [id, slot] : pipelines_) {
        (void)id;
        slots.push_back(slot.get());
      }
    }
    for (PipelineSlot* slot : slots) {
      std::lock_guard<std::mutex> slk(slot->mu);
      slot->pipeline->advance_watermark(now);
      pump_slot(*slot);
    }
    lk.lock();
  }
}

void PlatformService::refresh_loop() {
  std::unique_lock<std::mutex> lk(lifecycle_mu_);
  while (!stopping_) {
    lifecycle_cv_.wait_for(lk, options_.sampler.refresh_period, [&] { return stopping_; });
    if (stopping_) return;
    lk.unlock();
    sampler_.refresh_all();
    lk.lock();
  }
}

void PlatformService::stop() {
  {
    std::lock_guard<std::mutex> lk(lifecycle_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  lifecycle_cv_.notify_all();
  server_->stop();
  if (serve_thread_.joinable()) serve_thread_.join();
  if (punctuate_thread_.joinable()) punctuate_thread_.join();
  if (refresh_thread_.joinable()) refresh_thread_.join();
  trainers_.stop();
}

}  // namespace bandit
