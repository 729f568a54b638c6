#include "bandit/event_codec.hpp"

#include <nlohmann/json.hpp>

#include "bandit/errors.hpp"

namespace bandit {
namespace {

using nlohmann::json;

json context_to_json(const ContextVector& x) {
  json out = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x[i]);
  return out;
}

ContextVector context_from_json(const json& v, const std::string& where) {
  if (!v.is_array()) fail(Errc::MalformedRecord, where + ": 'context' must be an array");
  ContextVector x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(Errc::MalformedRecord, where + ": context entries must be numbers");
    x[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return x;
}

json parse_payload(const std::string& payload) {
  json doc = json::parse(payload, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    fail(Errc::MalformedRecord, "event record is not a JSON object");
  }
  return doc;
}

std::string str(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) {
    fail(Errc::MalformedRecord, where + ": missing string '" + std::string(key) + "'");
  }
  return it->get<std::string>();
}

int64_t integer(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_number_integer()) {
    fail(Errc::MalformedRecord, where + ": missing integer '" + std::string(key) + "'");
  }
  return it->get<int64_t>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(Errc::MalformedRecord, where + ": expected array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number()) fail(Errc::MalformedRecord, where + ": expected array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> strings(const json& v, const std::string& where) {
  if (!v.is_array()) fail(Errc::MalformedRecord, where + ": expected array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_string()) fail(Errc::MalformedRecord, where + ": expected array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

json example_to_json(const TrainingExample& e) {
  json out;
  out["request_id"] = e.request_id;
  out["ts"] = e.impression_ts_ms;
  out["context"] = context_to_json(e.context);
  out["arms"] = e.arms;
  out["reward"] = e.reward;
  if (e.click_position) out["click_position"] = *e.click_position;
  if (e.probability) out["probability"] = *e.probability;
  return out;
}

TrainingExample example_from_json(const json& v) {
  if (!v.is_object()) fail(Errc::MalformedRecord, "batch example must be an object");
  TrainingExample e;
  e.request_id = str(v, "request_id", "example");
  e.impression_ts_ms = integer(v, "ts", "example");
  e.context = context_from_json(v.value("context", json::array()), "example");
  e.arms = strings(v.value("arms", json::array()), "example.arms");
  e.reward = numbers(v.value("reward", json::array()), "example.reward");
  if (v.contains("click_position")) {
    e.click_position = static_cast<std::size_t>(v["click_position"].get<int64_t>());
  }
  if (v.contains("probability")) e.probability = v["probability"].get<double>();
  return e;
}

}  // namespace

std::string encode_impression(const ImpressionEvent& e) {
  json doc;
  doc["type"] = "impression";
  doc["bandit_id"] = e.bandit_id;
  doc["request_id"] = e.request_id;
  doc["session_id"] = e.session_id;
  doc["arms"] = e.arms;
  doc["context"] = context_to_json(e.context);
  doc["param_version"] = e.param_version;
  doc["ts"] = e.ts_ms;
  if (e.probability) doc["probability"] = *e.probability;
  return doc.dump();
}

std::string encode_reward(const RewardEvent& e) {
  json doc;
  doc["type"] = "reward";
  doc["bandit_id"] = e.bandit_id;
  doc["request_id"] = e.request_id;
  doc["values"] = e.values;
  if (e.click_position) doc["click_position"] = *e.click_position;
  doc["ts"] = e.ts_ms;
  return doc.dump();
}

std::string encode_watermark(int64_t ts_ms) {
  json doc;
  doc["type"] = "watermark";
  doc["ts"] = ts_ms;
  return doc.dump();
}

std::string encode_batch(const TrainingBatch& b) {
  json doc;
  doc["bandit_id"] = b.bandit_id;
  doc["seq"] = b.seq;
  doc["window_start"] = b.window_start_ms;
  doc["window_end"] = b.window_end_ms;
  json examples = json::array();
  for (const TrainingExample& e : b.examples) examples.push_back(example_to_json(e));
  doc["examples"] = std::move(examples);
  return doc.dump();
}

std::string record_type(const std::string& payload) {
  json doc = parse_payload(payload);
  std::string type = str(doc, "type", "event");
  if (type != "impression" && type != "reward" && type != "watermark") {
    fail(Errc::MalformedRecord, "unknown event record type '" + type + "'");
  }
  return type;
}

ImpressionEvent decode_impression(const std::string& payload) {
  json doc = parse_payload(payload);
  ImpressionEvent e;
  e.bandit_id = str(doc, "bandit_id", "impression");
  e.request_id = str(doc, "request_id", "impression");
  e.session_id = str(doc, "session_id", "impression");
  e.arms = strings(doc.value("arms", json::array()), "impression.arms");
  e.context = context_from_json(doc.value("context", json::array()), "impression");
  e.param_version = integer(doc, "param_version", "impression");
  e.ts_ms = integer(doc, "ts", "impression");
  if (doc.contains("probability")) e.probability = doc["probability"].get<double>();
  return e;
}

RewardEvent decode_reward(const std::string& payload) {
  json doc = parse_payload(payload);
  RewardEvent e;
  e.bandit_id = str(doc, "bandit_id", "reward");
  e.request_id = str(doc, "request_id", "reward");
  e.values = numbers(doc.value("values", json::array()), "reward.values");
  if (doc.contains("click_position")) {
    e.click_position = static_cast<std::size_t>(doc["click_position"].get<int64_t>());
  }
  e.ts_ms = integer(doc, "ts", "reward");
  return e;
}

int64_t decode_watermark(const std::string& payload) {
  json doc = parse_payload(payload);
  return integer(doc, "ts", "watermark");
}

TrainingBatch decode_batch(const std::string& payload) {
  json doc = parse_payload(payload);
  TrainingBatch b;
  b.bandit_id = str(doc, "bandit_id", "batch");
  b.seq = integer(doc, "seq", "batch");
  b.window_start_ms = integer(doc, "window_start", "batch");
  b.window_end_ms = integer(doc, "window_end", "batch");
  const json& examples = doc.value("examples", json::array());
  if (!examples.is_array()) fail(Errc::MalformedRecord, "batch: 'examples' must be an array");
  for (const json& e : examples) b.examples.push_back(example_from_json(e));
  return b;
}

}  // namespace bandit
