#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bandit/report.hpp"
#include "bandit/store.hpp"

namespace bandit {

// -- Synthetic environments ----------------------------------------------

struct BernoulliArms {
  std::vector<double> means;
};

// Reward = w_a . x + noise, one weight vector per arm over the encoded
// context (index 0 hits the intercept).
struct LinearContext {
  std::vector<std::vector<double>> weights;
  double noise = 0.0;
};

// Click probability sigma(w_a . x).
struct LogisticContext {
  std::vector<std::vector<double>> weights;
};

// Cascade browsing over per-item attraction probabilities: the user scans the
// ranking top down and clicks the first attracting item.
struct CascadeClicks {
  std::vector<double> attractions;
};

// weights[objective][arm] over the encoded context; every objective shares
// the noise scale.
struct MultiObjectiveLinear {
  std::vector<std::vector<std::vector<double>>> weights;
  double noise = 0.0;
};

struct DelayModel {
  enum class Kind { Fixed, Geometric };
  Kind kind = Kind::Fixed;
  int64_t steps = 0;     // Fixed
  double mean_steps = 0; // Geometric
};

struct Environment {
  std::variant<BernoulliArms, LinearContext, LogisticContext, CascadeClicks, MultiObjectiveLinear>
      model;
  DelayModel delay;
};

// JSON form: {"kind": "bernoulli"|"linear"|"logistic"|"cascade"|"multi",
// kind-specific fields, "delay": {"kind": "fixed"|"geometric", ...}}.
Environment environment_from_json(const std::string& text);
std::string environment_to_json(const Environment& env);

// Arms the environment models; must match the config's arm space.
std::size_t environment_arms(const Environment& env);

// -- Closed-loop runs ------------------------------------------------------

struct SimulationSpec {
  BanditConfig config;
  Environment env;
  int64_t horizon = 0;
  uint64_t seed = 1;
  FlushPolicy flush;
  // Session cache small by default: each step opens a fresh session, so a
  // serving-sized cache would only burn memory.
  std::size_t sampler_cache_capacity = 1024;
  bool measure_latency = false;
  // A poisoned training example fails the run unless explicitly allowed.
  bool allow_poisoned = false;
};

// Drives the full platform loop (sample -> log -> join -> batch -> train ->
// commit -> refresh) against the environment for spec.horizon steps, one
// simulated second per step. run_dir receives store/ and logs/. Deterministic
// in (spec, run_dir-independent): equal specs give byte-identical reports.
RunReport run_experiment(const std::string& run_dir, const SimulationSpec& spec);

// 50/50 A/B of a frozen bandit's exploit decisions against a fixed control
// arm, n_per_side trials each, alternating deterministically. Throws
// NotFrozen for a learning bandit.
ABReport freeze_and_ab(BanditStore& store, const std::string& bandit_id, const Environment& env,
                       const std::string& control_arm, int64_t n_per_side, uint64_t seed);

// -- Sweeps ----------------------------------------------------------------

struct SweepSpec {
  std::string config_json;  // base bandit config document
  std::string env_json;
  int64_t horizon = 0;
  std::vector<uint64_t> seeds;
  FlushPolicy flush;
  // Ordered grid: key -> JSON literals. Keys address config fields by dotted
  // path ("hyperparameters.epsilon", "attribution_window"), environment
  // fields under "env." ("env.delay.mean_steps"), or the flush policy under
  // "flush." ("flush.max_examples", "flush.max_wait_ms").
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  bool emit_svg = false;
};

// Parses {"config": {...}, "env": {...}, "horizon": N, "seeds": N | [..],
// "grid": {key: [values...]}, "svg": bool} into a SweepSpec.
SweepSpec sweep_spec_from_json(const std::string& text);

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string csv_file;
  std::vector<std::string> report_files;
  std::string svg_file;  // empty unless emit_svg
};

// Cartesian product of grid values x seeds; one run_experiment each, isolated
// under out_dir/runs/. Writes results.csv, per-run report JSON, and
// optionally an overlaid regret-curve SVG.
SweepResult run_sweep(const std::string& out_dir, const SweepSpec& spec);

}  // namespace bandit
