#include "bandit/config_json.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

#include "bandit/errors.hpp"

namespace bandit {
namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) fail(Errc::SchemaViolation, where + ": unknown key '" + key + "'");
  }
}

const json& member(const json& obj, const std::string& where, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::SchemaViolation, where + ": missing key '" + key + "'");
  return *it;
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(Errc::SchemaViolation, where + ": expected string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(Errc::SchemaViolation, where + ": expected number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    fail(Errc::SchemaViolation, where + ": expected nonnegative integer");
  }
  auto n = v.get<int64_t>();
  if (n < 0) fail(Errc::SchemaViolation, where + ": expected nonnegative integer");
  return static_cast<std::size_t>(n);
}

ArmSpace parse_arm_space(const json& v) {
  if (!v.is_object()) fail(Errc::SchemaViolation, "arm_space: expected object");
  require_keys(v, "arm_space", {"explicit", "slotted"});
  if (v.contains("explicit") == v.contains("slotted")) {
    fail(Errc::SchemaViolation, "arm_space: exactly one of 'explicit' or 'slotted'");
  }
  ArmSpace space;
  if (v.contains("explicit")) {
    const json& ids = v["explicit"];
    if (!ids.is_array()) fail(Errc::SchemaViolation, "arm_space.explicit: expected array");
    ExplicitArms arms;
    for (const json& id : ids) arms.ids.push_back(as_string(id, "arm_space.explicit[]"));
    space.space = std::move(arms);
  } else {
    const json& slots = v["slotted"];
    if (!slots.is_array()) fail(Errc::SchemaViolation, "arm_space.slotted: expected array");
    SlottedArms arms;
    for (const json& s : slots) {
      if (!s.is_object()) fail(Errc::SchemaViolation, "arm_space.slotted[]: expected object");
      require_keys(s, "arm_space.slotted[]", {"slot_name", "options"});
      Slot slot;
      slot.name = as_string(member(s, "arm_space.slotted[]", "slot_name"), "slot_name");
      const json& opts = member(s, "arm_space.slotted[]", "options");
      if (!opts.is_array()) fail(Errc::SchemaViolation, "arm_space.slotted[].options: expected array");
      for (const json& o : opts) slot.options.push_back(as_string(o, "options[]"));
      arms.slots.push_back(std::move(slot));
    }
    space.space = std::move(arms);
  }
  return space;
}

std::vector<FeatureSpec> parse_schema(const json& v) {
  if (!v.is_array()) fail(Errc::SchemaViolation, "context_schema: expected array");
  std::vector<FeatureSpec> schema;
  for (const json& f : v) {
    if (!f.is_object()) fail(Errc::SchemaViolation, "context_schema[]: expected object");
    FeatureSpec spec;
    spec.name = as_string(member(f, "context_schema[]", "name"), "context_schema[].name");
    std::string kind = as_string(member(f, "context_schema[]", "kind"), "context_schema[].kind");
    const std::string where = "context_schema['" + spec.name + "']";
    if (kind == "categorical") {
      require_keys(f, where, {"name", "kind", "cardinality"});
      spec.kind = CategoricalKind{as_count(member(f, where, "cardinality"), where + ".cardinality")};
    } else if (kind == "numeric") {
      require_keys(f, where, {"name", "kind", "lo", "hi"});
      spec.kind = NumericKind{as_number(member(f, where, "lo"), where + ".lo"),
                              as_number(member(f, where, "hi"), where + ".hi")};
    } else {
      fail(Errc::SchemaViolation, where + ": kind must be 'categorical' or 'numeric'");
    }
    schema.push_back(std::move(spec));
  }
  return schema;
}

RewardSpec parse_reward_spec(const json& v) {
  if (!v.is_object()) fail(Errc::SchemaViolation, "reward_spec: expected object");
  require_keys(v, "reward_spec", {"kind", "objectives"});
  RewardSpec spec;
  std::string kind = as_string(member(v, "reward_spec", "kind"), "reward_spec.kind");
  if (kind == "binary") {
    spec.kind = RewardSpec::Kind::Binary;
  } else if (kind == "continuous") {
    spec.kind = RewardSpec::Kind::Continuous;
  } else if (kind == "multi_objective") {
    spec.kind = RewardSpec::Kind::MultiObjective;
  } else {
    fail(Errc::SchemaViolation, "reward_spec.kind: must be 'binary', 'continuous', or 'multi_objective'");
  }
  if (v.contains("objectives")) {
    spec.objectives = as_count(v["objectives"], "reward_spec.objectives");
  } else {
    spec.objectives = spec.kind == RewardSpec::Kind::MultiObjective ? 2 : 1;
  }
  return spec;
}

HyperParams parse_hyperparams(const json& v) {
  if (!v.is_object()) fail(Errc::SchemaViolation, "hyperparameters: expected object");
  require_keys(v, "hyperparameters",
               {"epsilon", "exp3_gamma", "prior_variance", "igw_gamma0", "ggi_weights", "ranking_k",
                "greedy_passes", "latency_budget"});
  HyperParams hp;
  if (v.contains("epsilon")) hp.epsilon = as_number(v["epsilon"], "hyperparameters.epsilon");
  if (v.contains("exp3_gamma")) hp.exp3_gamma = as_number(v["exp3_gamma"], "hyperparameters.exp3_gamma");
  if (v.contains("prior_variance")) {
    hp.prior_variance = as_number(v["prior_variance"], "hyperparameters.prior_variance");
  }
  if (v.contains("igw_gamma0")) hp.igw_gamma0 = as_number(v["igw_gamma0"], "hyperparameters.igw_gamma0");
  if (v.contains("ggi_weights")) {
    const json& w = v["ggi_weights"];
    if (!w.is_array()) fail(Errc::SchemaViolation, "hyperparameters.ggi_weights: expected array");
    hp.ggi_weights.clear();
    for (const json& x : w) hp.ggi_weights.push_back(as_number(x, "hyperparameters.ggi_weights[]"));
  }
  if (v.contains("ranking_k")) hp.ranking_k = as_count(v["ranking_k"], "hyperparameters.ranking_k");
  if (v.contains("greedy_passes")) {
    hp.greedy_passes = as_count(v["greedy_passes"], "hyperparameters.greedy_passes");
  }
  if (v.contains("latency_budget")) {
    hp.latency_budget =
        std::chrono::milliseconds(as_count(v["latency_budget"], "hyperparameters.latency_budget"));
  }
  return hp;
}

json arm_space_to_json(const ArmSpace& space) {
  json v = json::object();
  if (space.slotted()) {
    json slots = json::array();
    for (const Slot& s : space.as_slotted().slots) {
      slots.push_back({{"slot_name", s.name}, {"options", s.options}});
    }
    v["slotted"] = std::move(slots);
  } else {
    v["explicit"] = space.as_explicit().ids;
  }
  return v;
}

json schema_to_json(const std::vector<FeatureSpec>& schema) {
  json v = json::array();
  for (const FeatureSpec& f : schema) {
    if (f.categorical()) {
      v.push_back({{"name", f.name},
                   {"kind", "categorical"},
                   {"cardinality", std::get<CategoricalKind>(f.kind).cardinality}});
    } else {
      const auto& num = std::get<NumericKind>(f.kind);
      v.push_back({{"name", f.name}, {"kind", "numeric"}, {"lo", num.lo}, {"hi", num.hi}});
    }
  }
  return v;
}

}  // namespace

BanditConfig config_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(Errc::MalformedRecord, "config is not valid JSON");
  if (!doc.is_object()) fail(Errc::SchemaViolation, "config: expected object");
  require_keys(doc, "config",
               {"bandit_id", "algorithm", "arm_space", "context_schema", "reward_spec",
                "hyperparameters", "attribution_window", "status"});

  BanditConfig config;
  config.bandit_id = as_string(member(doc, "config", "bandit_id"), "bandit_id");
  std::string algo = as_string(member(doc, "config", "algorithm"), "algorithm");
  auto parsed = algorithm_from_name(algo);
  if (!parsed) fail(Errc::SchemaViolation, "algorithm: unknown algorithm '" + algo + "'");
  config.algorithm = *parsed;
  config.arm_space = parse_arm_space(member(doc, "config", "arm_space"));
  if (doc.contains("context_schema")) config.context_schema = parse_schema(doc["context_schema"]);
  if (doc.contains("reward_spec")) config.reward_spec = parse_reward_spec(doc["reward_spec"]);
  if (doc.contains("hyperparameters")) {
    config.hyperparameters = parse_hyperparams(doc["hyperparameters"]);
  }
  if (doc.contains("attribution_window")) {
    config.attribution_window =
        std::chrono::seconds(as_count(doc["attribution_window"], "attribution_window"));
  }
  if (doc.contains("status")) {
    std::string status = as_string(doc["status"], "status");
    if (status == "learning") {
      config.status = LifecycleStatus::Learning;
    } else if (status == "frozen") {
      config.status = LifecycleStatus::Frozen;
    } else {
      fail(Errc::SchemaViolation, "status: must be 'learning' or 'frozen'");
    }
  }

  auto violations = validate_config(config);
  if (!violations.empty()) {
    std::string msg;
    for (const std::string& v : violations) {
      if (!msg.empty()) msg += "; ";
      msg += v;
    }
    fail(Errc::InvalidConfig, msg);
  }
  return config;
}

std::string config_to_json(const BanditConfig& config) {
  json doc;
  doc["bandit_id"] = config.bandit_id;
  doc["algorithm"] = algorithm_name(config.algorithm);
  doc["arm_space"] = arm_space_to_json(config.arm_space);
  doc["context_schema"] = schema_to_json(config.context_schema);
  const char* kind = config.reward_spec.kind == RewardSpec::Kind::Binary       ? "binary"
                     : config.reward_spec.kind == RewardSpec::Kind::Continuous ? "continuous"
                                                                               : "multi_objective";
  doc["reward_spec"] = {{"kind", kind}, {"objectives", config.reward_spec.objectives}};
  const HyperParams& hp = config.hyperparameters;
  doc["hyperparameters"] = {{"epsilon", hp.epsilon},
                            {"exp3_gamma", hp.exp3_gamma},
                            {"prior_variance", hp.prior_variance},
                            {"igw_gamma0", hp.igw_gamma0},
                            {"ggi_weights", hp.ggi_weights},
                            {"ranking_k", hp.ranking_k},
                            {"greedy_passes", hp.greedy_passes},
                            {"latency_budget", hp.latency_budget.count()}};
  doc["attribution_window"] = config.attribution_window.count();
  doc["status"] = config.frozen() ? "frozen" : "learning";
  return doc.dump();
}

bool config_equivalent_ignoring_status(const BanditConfig& a, const BanditConfig& b) {
  BanditConfig ca = a;
  BanditConfig cb = b;
  ca.status = LifecycleStatus::Learning;
  cb.status = LifecycleStatus::Learning;
  return config_to_json(ca) == config_to_json(cb);
}

}  // namespace bandit
