#include "bandit/store.hpp"

#include <nlohmann/json.hpp>

#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <utility>

#include "bandit/config_json.hpp"
#include "bandit/errors.hpp"
#include "bandit/policy.hpp"
#include "bandit/policy_codec.hpp"

namespace bandit {

namespace {

using nlohmann::json;

std::string encode_config_record(const BanditConfig& config, int64_t config_version) {
  json doc;
  doc["type"] = "config";
  doc["config_version"] = config_version;
  doc["config"] = json::parse(config_to_json(config));
  return doc.dump();
}

std::string encode_params_record(const ParamDocument& p) {
  json doc;
  doc["type"] = "params";
  doc["version"] = p.version;
  doc["algorithm"] = p.algorithm;
  doc["state"] = json::parse(p.state_json);
  doc["train_seq"] = p.train_seq;
  doc["updated_at"] = p.updated_at_ms;
  return doc.dump();
}

// Tunables may drift between versions; everything else identifies the bandit
// and must not. Comparing canonical JSON with the mutable fields pinned makes
// the check exhaustive without a field list in two places.
bool immutable_fields_equal(const BanditConfig& a, const BanditConfig& b) {
  BanditConfig na = a;
  BanditConfig nb = b;
  nb.hyperparameters = na.hyperparameters;
  nb.attribution_window = na.attribution_window;
  nb.status = na.status;
  return config_to_json(na) == config_to_json(nb);
}

}  // namespace

BanditStore::BanditStore(std::string dir, StoreOptions options, Clock* clock)
    : dir_(std::move(dir)), options_(options), clock_(clock) {
  std::filesystem::create_directories(dir_);
  load();
}

BanditStore::~BanditStore() = default;

std::string BanditStore::log_path(const std::string& bandit_id) const {
  return dir_ + "/" + bandit_id + ".log";
}

void BanditStore::load() {
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= 4 || name.substr(name.size() - 4) != ".log") continue;
    const std::string id = name.substr(0, name.size() - 4);

    auto snap = std::make_shared<Snapshot>();
    bool have_config = false;
    bool have_params = false;
    for (const auto& payload : read_log(entry.path().string())) {
      json doc;
      try {
        doc = json::parse(payload);
      } catch (const json::exception&) {
        fail(Errc::MalformedRecord, "store log " + name + " holds invalid JSON");
      }
      const std::string type = doc.value("type", "");
      if (type == "config") {
        snap->config = config_from_json(doc.at("config").dump());
        snap->config_version = doc.at("config_version").get<int64_t>();
        have_config = true;
      } else if (type == "params") {
        snap->params.bandit_id = id;
        snap->params.version = doc.at("version").get<int64_t>();
        snap->params.algorithm = doc.at("algorithm").get<std::string>();
        snap->params.state_json = doc.at("state").dump();
        snap->params.train_seq = doc.at("train_seq").get<int64_t>();
        snap->params.updated_at_ms = doc.at("updated_at").get<int64_t>();
        have_params = true;
      } else {
        fail(Errc::MalformedRecord, "store log " + name + " holds a '" + type + "' record");
      }
    }
    if (!have_config) continue;  // torn before the first record landed
    if (!have_params) {
      // Crashed between the config and seed params records. Params are a pure
      // function of the config at version 0, so rebuild them.
      snap->params.bandit_id = id;
      snap->params.version = 0;
      snap->params.algorithm = algorithm_name(snap->config.algorithm);
      snap->params.state_json = encode_policy(snap->config, init_policy(snap->config));
      snap->params.train_seq = 0;
      snap->params.updated_at_ms = clock_->now_ms();
    }

    auto e = std::make_unique<Entry>();
    e->writer = std::make_unique<RecordWriter>(entry.path().string(), options_.fsync);
    e->snap = std::move(snap);
    if (!have_params) append_params_record(*e, e->snap->params);
    entries_.emplace(id, std::move(e));
  }
}

BanditStore::Entry* BanditStore::find(const std::string& bandit_id) const {
  std::lock_guard<std::mutex> lk(map_mu_);
  auto it = entries_.find(bandit_id);
  return it == entries_.end() ? nullptr : it->second.get();
}

std::shared_ptr<const BanditStore::Snapshot> BanditStore::snapshot_of(
    const std::string& bandit_id) const {
  Entry* e = find(bandit_id);
  if (e == nullptr) fail(Errc::UnknownBandit, "no bandit named " + bandit_id);
  std::lock_guard<std::mutex> lk(e->snap_mu);
  // A null snapshot means creation is still in flight (or failed partway).
  if (e->snap == nullptr) fail(Errc::UnknownBandit, "no bandit named " + bandit_id);
  return e->snap;
}

void BanditStore::publish(Entry& e, std::shared_ptr<const Snapshot> snap) {
  std::lock_guard<std::mutex> lk(e.snap_mu);
  e.snap = std::move(snap);
}

void BanditStore::append_config_record(Entry& e, const Snapshot& snap) {
  e.writer->append(encode_config_record(snap.config, snap.config_version));
  e.appends_since_compact += 1;
}

void BanditStore::append_params_record(Entry& e, const ParamDocument& doc) {
  e.writer->append(encode_params_record(doc));
  e.appends_since_compact += 1;
}

void BanditStore::maybe_compact(Entry& e) {
  if (e.appends_since_compact < options_.compact_every) return;
  // The snapshot is the whole state, so two records replace the log. Write a
  // sibling file and rename over the original so a crash leaves one of the
  // two intact versions, never a mix.
  const std::string final_path = e.writer->path();
  const std::string tmp_path = final_path + ".compact";
  {
    RecordWriter tmp(tmp_path, options_.fsync);
    tmp.append(encode_config_record(e.snap->config, e.snap->config_version));
    tmp.append(encode_params_record(e.snap->params));
    tmp.flush();
  }
  e.writer.reset();  // close before the rename replaces the inode
  if (std::rename(tmp_path.c_str(), final_path.c_str()) != 0) {
    fail(Errc::IoError, "compact rename failed: " + std::string(std::strerror(errno)));
  }
  e.writer = std::make_unique<RecordWriter>(final_path, options_.fsync);
  e.appends_since_compact = 0;
}

int64_t BanditStore::put_config(const BanditConfig& config) {
  const auto violations = validate_config(config);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) {
      if (!msg.empty()) msg += "; ";
      msg += v;
    }
    fail(Errc::InvalidConfig, msg);
  }

  Entry* e = find(config.bandit_id);
  if (e == nullptr) {
    std::lock_guard<std::mutex> lk(map_mu_);
    auto [it, inserted] = entries_.try_emplace(config.bandit_id);
    if (inserted) {
      it->second = std::make_unique<Entry>();
      it->second->writer =
          std::make_unique<RecordWriter>(log_path(config.bandit_id), options_.fsync);
    }
    e = it->second.get();
  }

  std::lock_guard<std::mutex> lk(e->write_mu);
  if (e->snap == nullptr) {
    // Fresh bandit: persist the config, then seed version-0 parameters.
    auto snap = std::make_shared<Snapshot>();
    snap->config = config;
    snap->config_version = 0;
    snap->params.bandit_id = config.bandit_id;
    snap->params.version = 0;
    snap->params.algorithm = algorithm_name(config.algorithm);
    snap->params.state_json = encode_policy(config, init_policy(config));
    snap->params.train_seq = 0;
    snap->params.updated_at_ms = clock_->now_ms();
    append_config_record(*e, *snap);
    append_params_record(*e, snap->params);
    publish(*e, snap);
    return 0;
  }

  const Snapshot& cur = *e->snap;
  if (!immutable_fields_equal(cur.config, config)) {
    fail(Errc::ImmutableFieldChanged,
         "arm space, algorithm, schema, and reward spec are fixed at creation");
  }
  if (config_equivalent_ignoring_status(cur.config, config)) {
    return cur.params.version;  // no-op update, keep the stored status
  }
  auto snap = std::make_shared<Snapshot>(cur);
  snap->config.hyperparameters = config.hyperparameters;
  snap->config.attribution_window = config.attribution_window;
  snap->config_version = cur.config_version + 1;
  append_config_record(*e, *snap);
  publish(*e, snap);
  maybe_compact(*e);
  return snap->params.version;
}

int64_t BanditStore::freeze(const std::string& bandit_id) {
  Entry* e = find(bandit_id);
  if (e == nullptr) fail(Errc::UnknownBandit, "no bandit named " + bandit_id);
  std::lock_guard<std::mutex> lk(e->write_mu);
  if (e->snap == nullptr) fail(Errc::UnknownBandit, "no bandit named " + bandit_id);
  if (e->snap->config.frozen()) fail(Errc::AlreadyFrozen, bandit_id + " is already frozen");
  auto snap = std::make_shared<Snapshot>(*e->snap);
  snap->config.status = LifecycleStatus::Frozen;
  snap->config_version += 1;
  append_config_record(*e, *snap);
  publish(*e, snap);
  maybe_compact(*e);
  return snap->config_version;
}

BanditConfig BanditStore::get_config(const std::string& bandit_id) const {
  return snapshot_of(bandit_id)->config;
}

ParamDocument BanditStore::get_params(const std::string& bandit_id) const {
  return snapshot_of(bandit_id)->params;
}

BanditInfo BanditStore::get_info(const std::string& bandit_id) const {
  auto snap = snapshot_of(bandit_id);
  BanditInfo info;
  info.config = snap->config;
  info.config_version = snap->config_version;
  info.param_version = snap->params.version;
  info.train_seq = snap->params.train_seq;
  return info;
}

std::vector<std::string> BanditStore::list_bandits() const {
  std::vector<std::string> ids;
  {
    std::lock_guard<std::mutex> lk(map_mu_);
    ids.reserve(entries_.size());
    for (const auto& [id, entry] : entries_) {
      (void)entry;
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

CasOutcome BanditStore::cas_put_params(const std::string& bandit_id, int64_t expected_version,
                                       const std::string& state_json, int64_t train_seq) {
  Entry* e = find(bandit_id);
  if (e == nullptr) fail(Errc::UnknownBandit, "no bandit named " + bandit_id);
  std::lock_guard<std::mutex> lk(e->write_mu);
  if (e->snap == nullptr) fail(Errc::UnknownBandit, "no bandit named " + bandit_id);
  const Snapshot& cur = *e->snap;

  CasOutcome out;
  if (cur.config.frozen()) {
    out.version = cur.params.version;
    out.conflict = ConflictReason::Frozen;
    return out;
  }
  if (cur.params.version != expected_version) {
    out.version = cur.params.version;
    out.conflict = ConflictReason::VersionMismatch;
    return out;
  }
  if (train_seq <= cur.params.train_seq) {
    out.version = cur.params.version;
    out.conflict = ConflictReason::StaleTrainSeq;
    return out;
  }

  auto snap = std::make_shared<Snapshot>(cur);
  snap->params.version = cur.params.version + 1;
  snap->params.state_json = state_json;
  snap->params.train_seq = train_seq;
  snap->params.updated_at_ms = clock_->now_ms();
  append_params_record(*e, snap->params);  // synced before the ack when fsync is on
  publish(*e, snap);
  maybe_compact(*e);

  out.committed = true;
  out.version = snap->params.version;
  return out;
}

}  // namespace bandit
