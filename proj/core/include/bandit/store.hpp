#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "bandit/clock.hpp"
#include "bandit/config.hpp"
#include "bandit/framing.hpp"

namespace bandit {

// One versioned parameter document per bandit. state_json is the policy
// codec's canonical form; train_seq is the last training batch folded in.
struct ParamDocument {
  std::string bandit_id;
  std::string algorithm;
  std::string state_json;
  int64_t version = 0;
  int64_t train_seq = 0;
  int64_t updated_at_ms = 0;
};

enum class ConflictReason { None, VersionMismatch, StaleTrainSeq, Frozen };

struct CasOutcome {
  bool committed = false;
  int64_t version = 0;  // committed version, or the stored one on conflict
  ConflictReason conflict = ConflictReason::None;
};

struct BanditInfo {
  BanditConfig config;
  int64_t config_version = 0;
  int64_t param_version = 0;
  int64_t train_seq = 0;
};

struct StoreOptions {
  bool fsync = true;
  int64_t compact_every = 1024;  // appends between log compactions
};

// Durable registry of bandit configs and parameter documents. Each bandit
// owns an append-only log replayed at startup; writers append before
// acknowledging, readers hit an in-memory snapshot. Parameter writes go
// through compare-and-swap on (version, train_seq) so concurrent trainers
// cannot interleave stale updates.
class BanditStore {
 public:
  BanditStore(std::string dir, StoreOptions options, Clock* clock);
  ~BanditStore();

  // Creates the bandit (initializing fresh policy state) or updates its
  // tunables. Immutable fields reject with ImmutableFieldChanged; a config
  // equal up to status is a no-op. Returns the current parameter version.
  int64_t put_config(const BanditConfig& config);

  // Flips status to Frozen, bumping the config version. AlreadyFrozen if it
  // already is. Returns the new config version.
  int64_t freeze(const std::string& bandit_id);

  BanditConfig get_config(const std::string& bandit_id) const;
  ParamDocument get_params(const std::string& bandit_id) const;
  BanditInfo get_info(const std::string& bandit_id) const;
  std::vector<std::string> list_bandits() const;

  // Commits iff the stored version equals expected_version, the new train_seq
  // advances, and the bandit is not frozen. The record is durable before the
  // call returns committed.
  CasOutcome cas_put_params(const std::string& bandit_id, int64_t expected_version,
                            const std::string& state_json, int64_t train_seq);

  const std::string& dir() const { return dir_; }

 private:
  struct Snapshot {
    BanditConfig config;
    int64_t config_version = 0;
    ParamDocument params;
  };

  struct Entry {
    std::mutex write_mu;  // serializes appends and snapshot production
    mutable std::mutex snap_mu;
    std::shared_ptr<const Snapshot> snap;
    std::unique_ptr<RecordWriter> writer;
    int64_t appends_since_compact = 0;
  };

  std::string log_path(const std::string& bandit_id) const;
  Entry* find(const std::string& bandit_id) const;
  std::shared_ptr<const Snapshot> snapshot_of(const std::string& bandit_id) const;
  void publish(Entry& e, std::shared_ptr<const Snapshot> snap);
  void append_config_record(Entry& e, const Snapshot& snap);
  void append_params_record(Entry& e, const ParamDocument& doc);
  void maybe_compact(Entry& e);
  void load();

  std::string dir_;
  StoreOptions options_;
  Clock* clock_;
  mutable std::mutex map_mu_;  // guards entries_ shape, not entry contents
  std::unordered_map<std::string, std::unique_ptr<Entry>> entries_;
};

}  // namespace bandit
