#include "bandit/policy_codec.hpp"

#include <nlohmann/json.hpp>

#include "bandit/errors.hpp"

namespace bandit {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::VectorXd vec_from_json(const json& v, std::size_t d, const std::string& where) {
  if (!v.is_array() || v.size() != d) {
    fail(Errc::SchemaViolation, where + ": expected array of " + std::to_string(d) + " numbers");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (!v[i].is_number()) fail(Errc::SchemaViolation, where + ": expected numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd mat_from_json(const json& v, std::size_t d, const std::string& where) {
  if (!v.is_array() || v.size() != d * d) {
    fail(Errc::SchemaViolation, where + ": expected row-major array of " + std::to_string(d * d) + " numbers");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::size_t at = 0;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c, ++at) {
      if (!v[at].is_number()) fail(Errc::SchemaViolation, where + ": expected numbers");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[at].get<double>();
    }
  }
  return out;
}

double num(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    fail(Errc::SchemaViolation, where + ": missing number '" + std::string(key) + "'");
  }
  return it->get<double>();
}

json gaussian_to_json(const LinearGaussian& model) {
  return json{{"m", vec_to_json(model.m)}, {"P", mat_to_json(model.P)}};
}

LinearGaussian gaussian_from_json(const json& v, std::size_t d, const std::string& where) {
  if (!v.is_object()) fail(Errc::SchemaViolation, where + ": expected object");
  LinearGaussian model;
  model.m = vec_from_json(v.value("m", json()), d, where + ".m");
  model.P = mat_from_json(v.value("P", json()), d, where + ".P");
  return model;
}

json logistic_to_json(const LinearLogistic& model) {
  return json{{"m", vec_to_json(model.m)}, {"q", vec_to_json(model.q)}};
}

LinearLogistic logistic_from_json(const json& v, std::size_t d, const std::string& where) {
  if (!v.is_object()) fail(Errc::SchemaViolation, where + ": expected object");
  LinearLogistic model;
  model.m = vec_from_json(v.value("m", json()), d, where + ".m");
  model.q = vec_from_json(v.value("q", json()), d, where + ".q");
  return model;
}

// Arm ids in index order. Tabular policies re-derive this from the config, so
// the document only stores it for per-arm linear states.
std::vector<std::string> arm_ids(const BanditConfig& config) {
  return enumerate_arms(config.arm_space);
}

const json& arms_member(const json& doc) {
  auto it = doc.find("arms");
  if (it == doc.end()) fail(Errc::SchemaViolation, "params: missing 'arms'");
  return *it;
}

const json& arm_entry(const json& arms, const std::string& id) {
  auto it = arms.find(id);
  if (it == arms.end()) fail(Errc::SchemaViolation, "params missing arm '" + id + "'");
  return *it;
}

void check_arm_count(const json& arms, std::size_t expected) {
  if (!arms.is_object()) fail(Errc::SchemaViolation, "params 'arms' must be an object");
  if (arms.size() != expected) {
    fail(Errc::SchemaViolation, "params carry " + std::to_string(arms.size()) + " arms, config has " +
                                    std::to_string(expected));
  }
}

std::size_t recorded_dim(const json& doc, std::size_t expected) {
  auto d = static_cast<std::size_t>(num(doc, "d", "params"));
  if (d != expected) {
    fail(Errc::DimensionMismatch, "params record dim " + std::to_string(d) + ", schema gives " +
                                      std::to_string(expected));
  }
  return d;
}

}  // namespace

std::string encode_policy(const BanditConfig& config, const PolicyState& policy) {
  json doc;
  doc["update_batches"] = policy.update_batches;

  if (const auto* eg = std::get_if<EGState>(&policy.state)) {
    doc["kind"] = "eg";
    json arms = json::object();
    auto ids = arm_ids(config);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      arms[ids[i]] = {{"n", eg->n[i]}, {"mean", eg->mean[i]}};
    }
    doc["arms"] = std::move(arms);
  } else if (const auto* beta = std::get_if<BetaState>(&policy.state)) {
    doc["kind"] = "beta";
    json arms = json::object();
    auto ids = arm_ids(config);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      arms[ids[i]] = {{"alpha", beta->alpha[i]}, {"beta", beta->beta[i]}};
    }
    doc["arms"] = std::move(arms);
  } else if (const auto* exp3 = std::get_if<Exp3State>(&policy.state)) {
    doc["kind"] = "exp3";
    json arms = json::object();
    auto ids = arm_ids(config);
    for (std::size_t i = 0; i < ids.size(); ++i) arms[ids[i]] = {{"w", exp3->w[i]}};
    doc["arms"] = std::move(arms);
  } else if (const auto* cascade = std::get_if<CascadeState>(&policy.state)) {
    doc["kind"] = "cascade";
    json arms = json::object();
    auto ids = arm_ids(config);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      arms[ids[i]] = {{"alpha", cascade->alpha[i]}, {"beta", cascade->beta[i]}};
    }
    doc["arms"] = std::move(arms);
  } else if (const auto* rls = std::get_if<RLSState>(&policy.state)) {
    doc["kind"] = "rls";
    auto ids = arm_ids(config);
    doc["d"] = rls->arms.empty() ? 0 : static_cast<std::size_t>(rls->arms.front().m.size());
    doc["arm_order"] = ids;
    json arms = json::object();
    for (std::size_t i = 0; i < ids.size(); ++i) arms[ids[i]] = gaussian_to_json(rls->arms[i]);
    doc["arms"] = std::move(arms);
  } else if (const auto* blr = std::get_if<BLRState>(&policy.state)) {
    doc["kind"] = "blr";
    auto ids = arm_ids(config);
    doc["d"] = blr->arms.empty() ? 0 : static_cast<std::size_t>(blr->arms.front().m.size());
    doc["arm_order"] = ids;
    json arms = json::object();
    for (std::size_t i = 0; i < ids.size(); ++i) arms[ids[i]] = logistic_to_json(blr->arms[i]);
    doc["arms"] = std::move(arms);
  } else if (const auto* shared = std::get_if<LinearGaussian>(&policy.state)) {
    doc["kind"] = "rls_shared";
    doc["d"] = static_cast<std::size_t>(shared->m.size());
    doc["model"] = gaussian_to_json(*shared);
  } else if (const auto* shared_log = std::get_if<LinearLogistic>(&policy.state)) {
    doc["kind"] = "blr_shared";
    doc["d"] = static_cast<std::size_t>(shared_log->m.size());
    doc["model"] = logistic_to_json(*shared_log);
  } else if (const auto* multi = std::get_if<MultiRLSState>(&policy.state)) {
    doc["kind"] = "ggi";
    auto ids = arm_ids(config);
    std::size_t d = 0;
    if (!multi->objectives.empty() && !multi->objectives.front().arms.empty()) {
      d = static_cast<std::size_t>(multi->objectives.front().arms.front().m.size());
    }
    doc["d"] = d;
    doc["arm_order"] = ids;
    json objectives = json::array();
    for (const RLSState& obj : multi->objectives) {
      json arms = json::object();
      for (std::size_t i = 0; i < ids.size(); ++i) arms[ids[i]] = gaussian_to_json(obj.arms[i]);
      objectives.push_back({{"arms", std::move(arms)}});
    }
    doc["objectives"] = std::move(objectives);
  } else if (const auto* multi_shared = std::get_if<MultiSharedState>(&policy.state)) {
    doc["kind"] = "ggi_shared";
    doc["d"] = multi_shared->objectives.empty()
                   ? 0
                   : static_cast<std::size_t>(multi_shared->objectives.front().m.size());
    json objectives = json::array();
    for (const LinearGaussian& obj : multi_shared->objectives) {
      objectives.push_back(gaussian_to_json(obj));
    }
    doc["objectives"] = std::move(objectives);
  }
  return doc.dump();
}

PolicyState decode_policy(const BanditConfig& config, const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(Errc::MalformedRecord, "params are not valid JSON");
  if (!doc.is_object()) fail(Errc::SchemaViolation, "params: expected object");
  auto kind_it = doc.find("kind");
  if (kind_it == doc.end() || !kind_it->is_string()) {
    fail(Errc::SchemaViolation, "params: missing 'kind'");
  }
  const std::string kind = kind_it->get<std::string>();

  const char* expected = nullptr;
  const bool binary = config.reward_spec.kind == RewardSpec::Kind::Binary;
  switch (config.algorithm) {
    case Algorithm::EpsilonGreedy: expected = "eg"; break;
    case Algorithm::ThompsonBernoulli: expected = "beta"; break;
    case Algorithm::Exp3: expected = "exp3"; break;
    case Algorithm::CascadeTS: expected = "cascade"; break;
    case Algorithm::LinearTS:
    case Algorithm::LinearEG:
    case Algorithm::LinearIGW:
      if (config.arm_space.slotted()) {
        expected = binary ? "blr_shared" : "rls_shared";
      } else {
        expected = binary ? "blr" : "rls";
      }
      break;
    case Algorithm::MultiObjectiveGGI:
      expected = config.arm_space.slotted() ? "ggi_shared" : "ggi";
      break;
  }
  if (kind != expected) {
    fail(Errc::AlgorithmMismatch, "params kind '" + kind + "' does not fit " +
                                      algorithm_name(config.algorithm) + " (want '" + expected + "')");
  }

  PolicyState policy;
  if (doc.contains("update_batches")) {
    if (!doc["update_batches"].is_number_integer() && !doc["update_batches"].is_number_unsigned()) {
      fail(Errc::SchemaViolation, "params: 'update_batches' must be an integer");
    }
    policy.update_batches = doc["update_batches"].get<int64_t>();
  }

  const std::size_t ctx_dim = policy_context_dim(config);

  if (kind == "eg") {
    auto ids = arm_ids(config);
    const json& arms = arms_member(doc);
    check_arm_count(arms, ids.size());
    EGState state = make_eg(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const json& a = arm_entry(arms, ids[i]);
      state.n[i] = static_cast<int64_t>(num(a, "n", "arms['" + ids[i] + "']"));
      state.mean[i] = num(a, "mean", "arms['" + ids[i] + "']");
    }
    policy.state = std::move(state);
  } else if (kind == "beta" || kind == "cascade") {
    auto ids = arm_ids(config);
    const json& arms = arms_member(doc);
    check_arm_count(arms, ids.size());
    std::vector<double> alpha(ids.size()), beta(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const json& a = arm_entry(arms, ids[i]);
      alpha[i] = num(a, "alpha", "arms['" + ids[i] + "']");
      beta[i] = num(a, "beta", "arms['" + ids[i] + "']");
    }
    if (kind == "beta") {
      policy.state = BetaState{std::move(alpha), std::move(beta)};
    } else {
      policy.state = CascadeState{std::move(alpha), std::move(beta)};
    }
  } else if (kind == "exp3") {
    auto ids = arm_ids(config);
    const json& arms = arms_member(doc);
    check_arm_count(arms, ids.size());
    Exp3State state = make_exp3(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      state.w[i] = num(arm_entry(arms, ids[i]), "w", "arms['" + ids[i] + "']");
    }
    policy.state = std::move(state);
  } else if (kind == "rls" || kind == "blr") {
    auto ids = arm_ids(config);
    std::size_t d = recorded_dim(doc, ctx_dim);
    const json& arms = arms_member(doc);
    check_arm_count(arms, ids.size());
    if (kind == "rls") {
      RLSState state;
      state.arms.reserve(ids.size());
      for (const std::string& id : ids) {
        state.arms.push_back(gaussian_from_json(arm_entry(arms, id), d, "arms['" + id + "']"));
      }
      policy.state = std::move(state);
    } else {
      BLRState state;
      state.arms.reserve(ids.size());
      for (const std::string& id : ids) {
        state.arms.push_back(logistic_from_json(arm_entry(arms, id), d, "arms['" + id + "']"));
      }
      policy.state = std::move(state);
    }
  } else if (kind == "rls_shared" || kind == "blr_shared") {
    LinearFeatureMap map(ctx_dim, config.arm_space.as_slotted());
    std::size_t d = recorded_dim(doc, map.dim());
    auto model_it = doc.find("model");
    if (model_it == doc.end()) fail(Errc::SchemaViolation, "params: missing 'model'");
    if (kind == "rls_shared") {
      policy.state = gaussian_from_json(*model_it, d, "model");
    } else {
      policy.state = logistic_from_json(*model_it, d, "model");
    }
  } else if (kind == "ggi") {
    auto ids = arm_ids(config);
    std::size_t d = recorded_dim(doc, ctx_dim);
    auto obj_it = doc.find("objectives");
    if (obj_it == doc.end() || !obj_it->is_array() ||
        obj_it->size() != config.reward_spec.objectives) {
      fail(Errc::SchemaViolation, "params: 'objectives' must list one entry per objective");
    }
    MultiRLSState state;
    for (const json& obj : *obj_it) {
      auto arms_it = obj.find("arms");
      if (arms_it == obj.end()) fail(Errc::SchemaViolation, "objectives[]: missing 'arms'");
      check_arm_count(*arms_it, ids.size());
      RLSState one;
      one.arms.reserve(ids.size());
      for (const std::string& id : ids) {
        one.arms.push_back(gaussian_from_json(arm_entry(*arms_it, id), d, "arms['" + id + "']"));
      }
      state.objectives.push_back(std::move(one));
    }
    policy.state = std::move(state);
  } else {  // ggi_shared
    LinearFeatureMap map(ctx_dim, config.arm_space.as_slotted());
    std::size_t d = recorded_dim(doc, map.dim());
    auto obj_it = doc.find("objectives");
    if (obj_it == doc.end() || !obj_it->is_array() ||
        obj_it->size() != config.reward_spec.objectives) {
      fail(Errc::SchemaViolation, "params: 'objectives' must list one entry per objective");
    }
    MultiSharedState state;
    for (const json& obj : *obj_it) {
      state.objectives.push_back(gaussian_from_json(obj, d, "objectives[]"));
    }
    policy.state = std::move(state);
  }
  return policy;
}

}  // namespace bandit
