#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bandit/context.hpp"

namespace bandit {

struct ImpressionEvent {
  std::string bandit_id;
  std::string request_id;
  std::string session_id;
  std::vector<std::string> arms;  // ranking order for cascade bandits
  ContextVector context;          // encoded
  int64_t param_version = 0;
  int64_t ts_ms = 0;
  // Chosen-arm draw probability, present when the policy samples from an
  // explicit distribution; importance-weighted updates need it back.
  std::optional<double> probability;
};

struct RewardEvent {
  std::string bandit_id;
  std::string request_id;
  std::vector<double> values;  // one entry per objective
  std::optional<std::size_t> click_position;
  int64_t ts_ms = 0;  // arrival time at the collector
};

struct TrainingExample {
  std::string request_id;
  int64_t impression_ts_ms = 0;
  ContextVector context;
  std::vector<std::string> arms;
  std::vector<double> reward;
  std::optional<std::size_t> click_position;
  std::optional<double> probability;
};

struct TrainingBatch {
  std::string bandit_id;
  int64_t seq = 0;
  int64_t window_start_ms = 0;
  int64_t window_end_ms = 0;
  std::vector<TrainingExample> examples;
};

}  // namespace bandit
