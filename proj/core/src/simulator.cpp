#include "bandit/simulator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include "bandit/errors.hpp"
#include "bandit/config_json.hpp"
#include "bandit/policies/linear.hpp"
#include "bandit/policies/structured.hpp"
#include "bandit/policy.hpp"
#include "bandit/policy_codec.hpp"

namespace bandit {

namespace {

using nlohmann::json;

double dot(const std::vector<double>& w, const ContextVector& x) {
  return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())).dot(x);
}

std::vector<double> as_doubles(const json& arr, const std::string& where) {
  if (!arr.is_array()) fail(Errc::SchemaViolation, where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) fail(Errc::SchemaViolation, where + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& arr, const std::string& where) {
  if (!arr.is_array()) fail(Errc::SchemaViolation, where + ": expected an array of rows");
  std::vector<std::vector<double>> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_doubles(arr[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void check_unit_interval(const std::vector<double>& v, const std::string& where) {
  for (double p : v) {
    if (!(p >= 0.0 && p <= 1.0)) fail(Errc::OutOfRange, where + " must lie in [0, 1]");
  }
}

void validate_environment(const Environment& env) {
  if (const auto* b = std::get_if<BernoulliArms>(&env.model)) {
    if (b->means.empty()) fail(Errc::EmptyArmSet, "bernoulli environment has no arms");
    check_unit_interval(b->means, "bernoulli means");
  } else if (const auto* l = std::get_if<LinearContext>(&env.model)) {
    if (l->weights.empty()) fail(Errc::EmptyArmSet, "linear environment has no arms");
    if (!(l->noise >= 0.0)) fail(Errc::OutOfRange, "noise must be nonnegative");
  } else if (const auto* g = std::get_if<LogisticContext>(&env.model)) {
    if (g->weights.empty()) fail(Errc::EmptyArmSet, "logistic environment has no arms");
  } else if (const auto* c = std::get_if<CascadeClicks>(&env.model)) {
    if (c->attractions.empty()) fail(Errc::EmptyArmSet, "cascade environment has no items");
    check_unit_interval(c->attractions, "attraction probabilities");
  } else if (const auto* m = std::get_if<MultiObjectiveLinear>(&env.model)) {
    if (m->weights.empty() || m->weights[0].empty()) {
      fail(Errc::EmptyArmSet, "multi-objective environment has no arms");
    }
    for (const auto& rows : m->weights) {
      if (rows.size() != m->weights[0].size()) {
        fail(Errc::LengthMismatch, "every objective needs one weight row per arm");
      }
    }
    if (!(m->noise >= 0.0)) fail(Errc::OutOfRange, "noise must be nonnegative");
  }
  if (env.delay.kind == DelayModel::Kind::Fixed) {
    if (env.delay.steps < 0) fail(Errc::OutOfRange, "fixed delay must be nonnegative");
  } else if (!(env.delay.mean_steps >= 0.0)) {
    fail(Errc::OutOfRange, "geometric delay mean must be nonnegative");
  }
}

DelayModel delay_from_json(const json& doc) {
  DelayModel d;
  if (doc.is_null()) return d;
  const std::string kind = doc.value("kind", "fixed");
  if (kind == "fixed") {
    d.kind = DelayModel::Kind::Fixed;
    d.steps = doc.value("steps", int64_t{0});
  } else if (kind == "geometric") {
    d.kind = DelayModel::Kind::Geometric;
    d.mean_steps = doc.value("mean_steps", 0.0);
  } else {
    fail(Errc::SchemaViolation, "delay kind must be 'fixed' or 'geometric'");
  }
  return d;
}

int64_t draw_delay(const DelayModel& d, Rng& rng) {
  if (d.kind == DelayModel::Kind::Fixed) return d.steps;
  if (d.mean_steps <= 0.0) return 0;
  return rng.geometric_mean(d.mean_steps);
}

RawContext draw_context(const std::vector<FeatureSpec>& schema, Rng& rng) {
  RawContext raw;
  for (const auto& f : schema) {
    if (const auto* cat = std::get_if<CategoricalKind>(&f.kind)) {
      raw[f.name] = static_cast<double>(rng.uniform_index(cat->cardinality));
    } else {
      const auto& num = std::get<NumericKind>(f.kind);
      raw[f.name] = rng.uniform(num.lo, num.hi);
    }
  }
  return raw;
}

// Expected reward of playing `arms` at context x (scalarized for
// multi-objective environments). Regret is measured in this value.
double expected_value(const Environment& env, const BanditConfig& config, const ContextVector& x,
                      const std::vector<std::size_t>& arms) {
  if (const auto* b = std::get_if<BernoulliArms>(&env.model)) return b->means[arms[0]];
  if (const auto* l = std::get_if<LinearContext>(&env.model)) return dot(l->weights[arms[0]], x);
  if (const auto* g = std::get_if<LogisticContext>(&env.model)) {
    return sigmoid(dot(g->weights[arms[0]], x));
  }
  if (const auto* c = std::get_if<CascadeClicks>(&env.model)) {
    double miss = 1.0;
    for (std::size_t item : arms) miss *= 1.0 - c->attractions[item];
    return 1.0 - miss;
  }
  const auto& m = std::get<MultiObjectiveLinear>(env.model);
  std::vector<double> values;
  values.reserve(m.weights.size());
  for (const auto& rows : m.weights) values.push_back(dot(rows[arms[0]], x));
  const GGIWeights w = GGIWeights::make(config.hyperparameters.ggi_weights);
  return ggi_scalarize(values, w);
}

std::vector<std::size_t> oracle_arms(const Environment& env, const BanditConfig& config,
                                     const ContextVector& x) {
  if (const auto* c = std::get_if<CascadeClicks>(&env.model)) {
    // The click probability 1 - prod(1 - a_i) is maximized by the k largest
    // attractions.
    std::vector<std::size_t> order(c->attractions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return c->attractions[a] > c->attractions[b];
    });
    order.resize(std::min<std::size_t>(config.hyperparameters.ranking_k, order.size()));
    return order;
  }
  std::size_t n = 0;
  if (const auto* b = std::get_if<BernoulliArms>(&env.model)) n = b->means.size();
  if (const auto* l = std::get_if<LinearContext>(&env.model)) n = l->weights.size();
  if (const auto* g = std::get_if<LogisticContext>(&env.model)) n = g->weights.size();
  if (const auto* m = std::get_if<MultiObjectiveLinear>(&env.model)) n = m->weights[0].size();
  std::size_t best = 0;
  double best_value = expected_value(env, config, x, {0});
  for (std::size_t a = 1; a < n; ++a) {
    const double v = expected_value(env, config, x, {a});
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return {best};
}

struct Feedback {
  bool has_event = false;
  std::vector<double> values;
  std::optional<std::size_t> click_position;
};

// What the simulated user sends back. Binary environments only emit positive
// events; silence is what the pipeline's expiry default is for.
Feedback draw_feedback(const Environment& env, const ContextVector& x,
                       const std::vector<std::size_t>& arms, Rng& rng) {
  Feedback fb;
  if (const auto* b = std::get_if<BernoulliArms>(&env.model)) {
    if (rng.uniform01() < b->means[arms[0]]) {
      fb.has_event = true;
      fb.values = {1.0};
    }
    return fb;
  }
  if (const auto* l = std::get_if<LinearContext>(&env.model)) {
    double v = dot(l->weights[arms[0]], x);
    if (l->noise > 0.0) v += l->noise * rng.gaussian();
    fb.has_event = true;
    fb.values = {v};
    return fb;
  }
  if (const auto* g = std::get_if<LogisticContext>(&env.model)) {
    if (rng.uniform01() < sigmoid(dot(g->weights[arms[0]], x))) {
      fb.has_event = true;
      fb.values = {1.0};
    }
    return fb;
  }
  if (const auto* c = std::get_if<CascadeClicks>(&env.model)) {
    for (std::size_t i = 0; i < arms.size(); ++i) {
      if (rng.uniform01() < c->attractions[arms[i]]) {
        fb.has_event = true;
        fb.values = {1.0};
        fb.click_position = i;
        break;
      }
    }
    return fb;
  }
  const auto& m = std::get<MultiObjectiveLinear>(env.model);
  fb.has_event = true;
  fb.values.reserve(m.weights.size());
  for (const auto& rows : m.weights) {
    double v = dot(rows[arms[0]], x);
    if (m.noise > 0.0) v += m.noise * rng.gaussian();
    fb.values.push_back(v);
  }
  return fb;
}

// Realized (possibly noisy) scalar reward for one A/B trial.
double realized_reward(const Environment& env, const BanditConfig& config, const ContextVector& x,
                       const std::vector<std::size_t>& arms, Rng& rng) {
  if (std::holds_alternative<BernoulliArms>(env.model) ||
      std::holds_alternative<LogisticContext>(env.model) ||
      std::holds_alternative<CascadeClicks>(env.model)) {
    Feedback fb = draw_feedback(env, x, arms, rng);
    return fb.has_event ? 1.0 : 0.0;
  }
  if (const auto* l = std::get_if<LinearContext>(&env.model)) {
    double v = dot(l->weights[arms[0]], x);
    if (l->noise > 0.0) v += l->noise * rng.gaussian();
    return v;
  }
  const auto& m = std::get<MultiObjectiveLinear>(env.model);
  std::vector<double> values;
  values.reserve(m.weights.size());
  for (const auto& rows : m.weights) {
    double v = dot(rows[arms[0]], x);
    if (m.noise > 0.0) v += m.noise * rng.gaussian();
    values.push_back(v);
  }
  return ggi_scalarize(values, GGIWeights::make(config.hyperparameters.ggi_weights));
}

void check_env_against_config(const Environment& env, const BanditConfig& config) {
  validate_environment(env);
  const std::size_t env_n = environment_arms(env);
  const std::size_t cfg_n = config.arm_space.total_arms();
  if (env_n != cfg_n) {
    fail(Errc::LengthMismatch, "environment models " + std::to_string(env_n) +
                                   " arms, config declares " + std::to_string(cfg_n));
  }
  const bool cascade_env = std::holds_alternative<CascadeClicks>(env.model);
  if (cascade_env != (config.algorithm == Algorithm::CascadeTS)) {
    fail(Errc::InvalidConfig, "cascade environments pair with the ranking algorithm only");
  }
  RewardSpec::Kind want = RewardSpec::Kind::Binary;
  if (std::holds_alternative<LinearContext>(env.model)) want = RewardSpec::Kind::Continuous;
  if (std::holds_alternative<MultiObjectiveLinear>(env.model)) {
    want = RewardSpec::Kind::MultiObjective;
  }
  if (config.reward_spec.kind != want) {
    fail(Errc::InvalidConfig, "environment feedback does not match the config's reward kind");
  }
  const std::size_t d = context_dimension(config.context_schema);
  auto check_rows = [&](const std::vector<std::vector<double>>& rows, const std::string& where) {
    for (const auto& row : rows) {
      if (row.size() != d) {
        fail(Errc::DimensionMismatch, where + " rows must have " + std::to_string(d) +
                                          " entries (intercept plus encoded features)");
      }
    }
  };
  if (const auto* l = std::get_if<LinearContext>(&env.model)) check_rows(l->weights, "weight");
  if (const auto* g = std::get_if<LogisticContext>(&env.model)) check_rows(g->weights, "weight");
  if (const auto* m = std::get_if<MultiObjectiveLinear>(&env.model)) {
    if (m->weights.size() != config.reward_spec.objectives) {
      fail(Errc::LengthMismatch, "environment objectives != reward_spec objectives");
    }
    for (const auto& rows : m->weights) check_rows(rows, "weight");
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << content;
  if (!out.flush()) fail(Errc::IoError, "short write to " + path);
}

}  // namespace

Environment environment_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(Errc::MalformedRecord, "environment file is not valid JSON");
  if (!doc.is_object()) fail(Errc::SchemaViolation, "environment must be a JSON object");
  Environment env;
  const std::string kind = doc.value("kind", "");
  if (kind == "bernoulli") {
    env.model = BernoulliArms{as_doubles(doc.value("means", json::array()), "means")};
  } else if (kind == "linear") {
    env.model = LinearContext{as_matrix(doc.value("weights", json::array()), "weights"),
                              doc.value("noise", 0.0)};
  } else if (kind == "logistic") {
    env.model = LogisticContext{as_matrix(doc.value("weights", json::array()), "weights")};
  } else if (kind == "cascade") {
    env.model = CascadeClicks{as_doubles(doc.value("attractions", json::array()), "attractions")};
  } else if (kind == "multi") {
    MultiObjectiveLinear m;
    const json& w = doc.value("weights", json::array());
    if (!w.is_array()) fail(Errc::SchemaViolation, "weights: expected array of matrices");
    for (std::size_t j = 0; j < w.size(); ++j) {
      m.weights.push_back(as_matrix(w[j], "weights[" + std::to_string(j) + "]"));
    }
    m.noise = doc.value("noise", 0.0);
    env.model = std::move(m);
  } else {
    fail(Errc::SchemaViolation,
         "environment kind must be bernoulli, linear, logistic, cascade, or multi");
  }
  env.delay = delay_from_json(doc.contains("delay") ? doc["delay"] : json());
  validate_environment(env);
  return env;
}

std::string environment_to_json(const Environment& env) {
  json doc;
  if (const auto* b = std::get_if<BernoulliArms>(&env.model)) {
    doc["kind"] = "bernoulli";
    doc["means"] = b->means;
  } else if (const auto* l = std::get_if<LinearContext>(&env.model)) {
    doc["kind"] = "linear";
    doc["weights"] = l->weights;
    doc["noise"] = l->noise;
  } else if (const auto* g = std::get_if<LogisticContext>(&env.model)) {
    doc["kind"] = "logistic";
    doc["weights"] = g->weights;
  } else if (const auto* c = std::get_if<CascadeClicks>(&env.model)) {
    doc["kind"] = "cascade";
    doc["attractions"] = c->attractions;
  } else {
    const auto& m = std::get<MultiObjectiveLinear>(env.model);
    doc["kind"] = "multi";
    doc["weights"] = m.weights;
    doc["noise"] = m.noise;
  }
  if (env.delay.kind == DelayModel::Kind::Fixed) {
    doc["delay"] = {{"kind", "fixed"}, {"steps", env.delay.steps}};
  } else {
    doc["delay"] = {{"kind", "geometric"}, {"mean_steps", env.delay.mean_steps}};
  }
  return doc.dump();
}

std::size_t environment_arms(const Environment& env) {
  if (const auto* b = std::get_if<BernoulliArms>(&env.model)) return b->means.size();
  if (const auto* l = std::get_if<LinearContext>(&env.model)) return l->weights.size();
  if (const auto* g = std::get_if<LogisticContext>(&env.model)) return g->weights.size();
  if (const auto* c = std::get_if<CascadeClicks>(&env.model)) return c->attractions.size();
  return std::get<MultiObjectiveLinear>(env.model).weights[0].size();
}

RunReport run_experiment(const std::string& run_dir, const SimulationSpec& spec) {
  if (spec.horizon <= 0) fail(Errc::OutOfRange, "horizon must be positive");
  BanditConfig config = spec.config;
  config.status = LifecycleStatus::Learning;
  check_env_against_config(spec.env, config);

  std::filesystem::create_directories(run_dir);
  SimClock clock(0);
  BanditStore store(run_dir + "/store", StoreOptions{false, 1024}, &clock);
  store.put_config(config);

  // One root seed fans out to the decision path and the environment, so a
  // (spec, seed) pair fixes every draw in the run.
  Rng root(spec.seed);
  const uint64_t sampler_seed = root.next_u64();
  Rng env_rng = root.fork();

  SamplerOptions sampler_options;
  sampler_options.cache_capacity = spec.sampler_cache_capacity;
  Sampler sampler(&store, sampler_options, &clock, sampler_seed);
  RewardPipeline pipeline(run_dir + "/logs", config, spec.flush, false);
  sampler.set_impression_sink([&](const ImpressionEvent& e) { pipeline.on_impression(e); });
  Trainer trainer(&store);
  const ArmIndexer indexer(config.arm_space);

  const int64_t horizon = spec.horizon;
  const std::size_t n_arms = indexer.size();
  const bool tabulate_pulls = n_arms <= 256;
  const int64_t stride = std::max<int64_t>(1, horizon / 1000);
  const int64_t pull_window = std::max<int64_t>(1, horizon / 20);

  RunReport report;
  report.bandit_id = config.bandit_id;
  report.algorithm = algorithm_name(config.algorithm);
  report.seed = spec.seed;
  report.horizon = horizon;
  report.curve_stride = stride;
  report.pull_window = tabulate_pulls ? pull_window : 0;
  report.measured_latency = spec.measure_latency;
  if (spec.measure_latency) report.latency_us_histogram.assign(18, 0);

  double regret = 0.0;
  std::vector<uint8_t> oracle_hits(static_cast<std::size_t>(horizon), 0);
  std::vector<double> window_pulls(tabulate_pulls ? n_arms : 0, 0.0);
  int64_t window_steps = 0;
  std::map<int64_t, std::vector<RewardEvent>> due;  // arrival step -> events

  auto train_pending = [&] {
    for (auto& batch : pipeline.take_batches()) {
      if (trainer.process(batch) == TrainOutcome::Applied) sampler.refresh(config.bandit_id);
    }
  };
  auto close_pull_window = [&] {
    if (!tabulate_pulls || window_steps == 0) return;
    std::vector<double> fractions(window_pulls);
    for (double& f : fractions) f /= static_cast<double>(window_steps);
    report.pull_fractions.push_back(std::move(fractions));
    std::fill(window_pulls.begin(), window_pulls.end(), 0.0);
    window_steps = 0;
  };

  for (int64_t t = 0; t < horizon; ++t) {
    const int64_t now_ms = t * 1000;
    clock.set(now_ms);
    const RawContext raw = draw_context(config.context_schema, env_rng);

    std::chrono::steady_clock::time_point t0;
    if (spec.measure_latency) t0 = std::chrono::steady_clock::now();
    const Decision decision = sampler.sample(config.bandit_id, "s" + std::to_string(t), raw);
    if (spec.measure_latency) {
      const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      std::size_t bucket = 0;
      while (bucket + 1 < report.latency_us_histogram.size() &&
             us >= (int64_t{1} << bucket)) {
        bucket += 1;
      }
      report.latency_us_histogram[bucket] += 1;
    }

    std::vector<std::size_t> chosen;
    chosen.reserve(decision.arms.size());
    for (const auto& id : decision.arms) chosen.push_back(indexer.index_of(id));

    const ContextVector x = encode_context(config.context_schema, raw);
    const std::vector<std::size_t> best = oracle_arms(spec.env, config, x);
    regret += expected_value(spec.env, config, x, best) -
              expected_value(spec.env, config, x, chosen);
    const bool hit = chosen.size() == best.size() &&
                     std::set<std::size_t>(chosen.begin(), chosen.end()) ==
                         std::set<std::size_t>(best.begin(), best.end());
    oracle_hits[static_cast<std::size_t>(t)] = hit ? 1 : 0;

    if (tabulate_pulls) {
      const double share = 1.0 / static_cast<double>(chosen.size());
      for (std::size_t a : chosen) window_pulls[a] += share;
      window_steps += 1;
      if (window_steps == pull_window) close_pull_window();
    }

    Feedback fb = draw_feedback(spec.env, x, chosen, env_rng);
    if (fb.has_event) {
      const int64_t at = t + draw_delay(spec.env.delay, env_rng);
      RewardEvent e;
      e.bandit_id = config.bandit_id;
      e.request_id = decision.request_id;
      e.values = std::move(fb.values);
      e.click_position = fb.click_position;
      e.ts_ms = at * 1000;
      due[at].push_back(std::move(e));
    }
    if (auto it = due.find(t); it != due.end()) {
      for (auto& e : it->second) pipeline.on_reward(e);
      due.erase(it);
    }
    train_pending();

    if ((t + 1) % stride == 0 || t + 1 == horizon) {
      if (report.curve_steps.empty() || report.curve_steps.back() != t + 1) {
        report.curve_steps.push_back(t + 1);
        report.curve_regret.push_back(regret);
      }
    }
  }
  close_pull_window();

  // Horizon reached: let the stragglers arrive, then force out what is left.
  for (auto& [step, events] : due) {
    clock.set(step * 1000);
    for (auto& e : events) pipeline.on_reward(e);
    train_pending();
  }
  due.clear();
  pipeline.finish();
  train_pending();

  report.final_regret = regret;
  report.pipeline = pipeline.counters();
  report.trainer = trainer.counters();
  report.sampler = sampler.counters();
  const BanditInfo info = store.get_info(config.bandit_id);
  report.final_param_version = info.param_version;
  report.final_train_seq = info.train_seq;

  if (!spec.allow_poisoned && report.trainer.poisoned_examples > 0) {
    fail(Errc::SchemaViolation, "run poisoned " +
                                    std::to_string(report.trainer.poisoned_examples) +
                                    " training examples");
  }
  if (report.pipeline.impressions !=
      report.pipeline.examples + report.pipeline.expired_dropped) {
    fail(Errc::SchemaViolation, "conservation violated: impressions != examples + drops");
  }

  const int64_t tail = std::max<int64_t>(1, horizon / 10);
  int64_t tail_hits = 0;
  for (int64_t t = horizon - tail; t < horizon; ++t) {
    tail_hits += oracle_hits[static_cast<std::size_t>(t)];
  }
  report.oracle_match_final = static_cast<double>(tail_hits) / static_cast<double>(tail);

  const int64_t min_suffix = std::max<int64_t>(100, horizon / 100);
  int64_t suffix_hits = 0;
  report.convergence_step = -1;
  for (int64_t s = horizon - 1; s >= 0; --s) {
    suffix_hits += oracle_hits[static_cast<std::size_t>(s)];
    const int64_t len = horizon - s;
    if (len >= min_suffix && 10 * suffix_hits >= 9 * len) report.convergence_step = s;
  }
  return report;
}

ABReport freeze_and_ab(BanditStore& store, const std::string& bandit_id, const Environment& env,
                       const std::string& control_arm, int64_t n_per_side, uint64_t seed) {
  const BanditConfig config = store.get_config(bandit_id);
  if (!config.frozen()) {
    fail(Errc::NotFrozen, bandit_id + " must be frozen before the A/B comparison");
  }
  check_env_against_config(env, config);
  if (n_per_side <= 0) fail(Errc::OutOfRange, "n_per_side must be positive");
  const ArmIndexer indexer(config.arm_space);
  const std::vector<std::size_t> control = {indexer.index_of(control_arm)};
  const PolicyState state = decode_policy(config, store.get_params(bandit_id).state_json);

  Rng rng(seed);
  double sum_t = 0, sum_t2 = 0, sum_c = 0, sum_c2 = 0;
  for (int64_t i = 0; i < n_per_side; ++i) {
    // Both sides draw their own visitor, as two arms of a real test would.
    const RawContext raw_t = draw_context(config.context_schema, rng);
    const ContextVector x_t = encode_context(config.context_schema, raw_t);
    const SampleOutcome outcome = sample_policy(config, state, x_t, rng);
    const double rt = realized_reward(env, config, x_t, outcome.arms, rng);
    sum_t += rt;
    sum_t2 += rt * rt;

    const RawContext raw_c = draw_context(config.context_schema, rng);
    const ContextVector x_c = encode_context(config.context_schema, raw_c);
    const double rc = realized_reward(env, config, x_c, control, rng);
    sum_c += rc;
    sum_c2 += rc * rc;
  }
  const double n = static_cast<double>(n_per_side);
  ABReport report;
  report.bandit_id = bandit_id;
  report.control_arm = control_arm;
  report.n_per_side = n_per_side;
  report.treatment_mean = sum_t / n;
  report.control_mean = sum_c / n;
  report.uplift = report.treatment_mean - report.control_mean;
  const double var_t = std::max(0.0, sum_t2 / n - report.treatment_mean * report.treatment_mean);
  const double var_c = std::max(0.0, sum_c2 / n - report.control_mean * report.control_mean);
  const double se = std::sqrt((var_t + var_c) / n);
  report.ci_low = report.uplift - 1.96 * se;
  report.ci_high = report.uplift + 1.96 * se;
  return report;
}

namespace {

void apply_override(json& doc, const std::string& dotted, const json& value) {
  json* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dotpos = dotted.find('.', start);
    const std::string key = dotted.substr(start, dotpos - start);
    if (key.empty()) fail(Errc::SchemaViolation, "bad grid key '" + dotted + "'");
    if (dotpos == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = json::object();
    cur = &(*cur)[key];
    start = dotpos + 1;
  }
}

std::string point_label(const std::vector<std::pair<std::string, std::string>>& params) {
  if (params.empty()) return "base";
  std::string label;
  for (const auto& [k, v] : params) {
    if (!label.empty()) label += "_";
    label += k + "=" + v;
  }
  for (char& c : label) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '=' && c != '_' && c != '-' &&
        c != '.') {
      c = '-';
    }
  }
  return label;
}

}  // namespace

SweepSpec sweep_spec_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(Errc::MalformedRecord, "sweep file is not valid JSON");
  if (!doc.is_object() || !doc.contains("config") || !doc.contains("env") ||
      !doc.contains("horizon")) {
    fail(Errc::SchemaViolation, "sweep file needs config, env, and horizon");
  }
  SweepSpec spec;
  spec.config_json = doc["config"].dump();
  spec.env_json = doc["env"].dump();
  spec.horizon = doc["horizon"].get<int64_t>();
  if (doc.contains("seeds")) {
    if (doc["seeds"].is_array()) {
      for (const auto& s : doc["seeds"]) spec.seeds.push_back(s.get<uint64_t>());
    } else {
      const auto n = doc["seeds"].get<int64_t>();
      for (int64_t s = 1; s <= n; ++s) spec.seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  if (spec.seeds.empty()) spec.seeds.push_back(1);
  if (doc.contains("flush")) {
    spec.flush.max_examples = doc["flush"].value("max_examples", spec.flush.max_examples);
    spec.flush.max_wait_ms = doc["flush"].value("max_wait_ms", spec.flush.max_wait_ms);
  }
  if (doc.contains("grid")) {
    if (!doc["grid"].is_object()) fail(Errc::SchemaViolation, "grid must be an object of arrays");
    for (const auto& [key, values] : doc["grid"].items()) {
      if (!values.is_array() || values.empty()) {
        fail(Errc::SchemaViolation, "grid values for '" + key + "' must be a non-empty array");
      }
      std::vector<std::string> literals;
      for (const auto& v : values) literals.push_back(v.dump());
      spec.grid.emplace_back(key, std::move(literals));
    }
  }
  spec.emit_svg = doc.value("svg", false);
  return spec;
}

SweepResult run_sweep(const std::string& out_dir, const SweepSpec& spec) {
  std::filesystem::create_directories(out_dir + "/runs");
  json base_config = json::parse(spec.config_json, nullptr, false);
  json base_env = json::parse(spec.env_json, nullptr, false);
  if (base_config.is_discarded() || base_env.is_discarded()) {
    fail(Errc::MalformedRecord, "sweep config or env is not valid JSON");
  }

  // Odometer over the grid axes; an empty grid is the single base point.
  std::vector<std::size_t> idx(spec.grid.size(), 0);
  SweepResult result;
  std::vector<SvgSeries> curves;
  for (;;) {
    json config_doc = base_config;
    json env_doc = base_env;
    FlushPolicy flush = spec.flush;
    std::vector<std::pair<std::string, std::string>> point;
    for (std::size_t axis = 0; axis < spec.grid.size(); ++axis) {
      const auto& [key, literals] = spec.grid[axis];
      const std::string& literal = literals[idx[axis]];
      const json value = json::parse(literal);
      if (key.rfind("env.", 0) == 0) {
        apply_override(env_doc, key.substr(4), value);
      } else if (key == "flush.max_examples") {
        flush.max_examples = value.get<std::size_t>();
      } else if (key == "flush.max_wait_ms") {
        flush.max_wait_ms = value.get<int64_t>();
      } else {
        apply_override(config_doc, key, value);
      }
      point.emplace_back(key, literal);
    }
    const std::string label = point_label(point);

    SimulationSpec run;
    run.config = config_from_json(config_doc.dump());
    run.env = environment_from_json(env_doc.dump());
    run.horizon = spec.horizon;
    run.flush = flush;
    bool first_seed = true;
    for (uint64_t seed : spec.seeds) {
      run.seed = seed;
      const std::string run_dir = out_dir + "/runs/" + label + "-seed" + std::to_string(seed);
      const RunReport report = run_experiment(run_dir, run);
      const std::string report_file = "report-" + label + "-seed" + std::to_string(seed) + ".json";
      write_file(out_dir + "/" + report_file, report_to_json(report));
      result.report_files.push_back(report_file);

      SweepRow row;
      for (const auto& [k, v] : point) row.params[k] = v;
      row.seed = seed;
      row.final_regret = report.final_regret;
      row.oracle_match_final = report.oracle_match_final;
      row.convergence_step = report.convergence_step;
      row.report_file = report_file;
      result.rows.push_back(std::move(row));

      if (spec.emit_svg && first_seed) {
        curves.push_back(SvgSeries{label, report.curve_steps, report.curve_regret});
        first_seed = false;
      }
    }

    bool exhausted = spec.grid.empty();
    std::size_t axis = spec.grid.size();
    while (axis > 0) {
      axis -= 1;
      idx[axis] += 1;
      if (idx[axis] < spec.grid[axis].second.size()) break;
      idx[axis] = 0;
      if (axis == 0) exhausted = true;
    }
    if (exhausted) break;
  }

  result.csv_file = out_dir + "/results.csv";
  write_file(result.csv_file, sweep_csv(result.rows));
  if (spec.emit_svg) {
    result.svg_file = out_dir + "/regret.svg";
    write_file(result.svg_file, svg_line_plot("cumulative regret", curves));
  }
  return result;
}

}  // namespace bandit
