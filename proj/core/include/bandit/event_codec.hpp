#pragma once

#include <string>

#include "bandit/events.hpp"

namespace bandit {

// Log record payloads, canonical JSON tagged by "type": "impression",
// "reward", or "watermark". Watermark records carry only a timestamp and let
// replays advance event time when no events flow.

std::string encode_impression(const ImpressionEvent& e);
std::string encode_reward(const RewardEvent& e);
std::string encode_watermark(int64_t ts_ms);
std::string encode_batch(const TrainingBatch& b);

// "impression" | "reward" | "watermark"; throws MalformedRecord otherwise.
std::string record_type(const std::string& payload);

ImpressionEvent decode_impression(const std::string& payload);
RewardEvent decode_reward(const std::string& payload);
int64_t decode_watermark(const std::string& payload);
TrainingBatch decode_batch(const std::string& payload);

}  // namespace bandit
