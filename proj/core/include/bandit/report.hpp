#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bandit/pipeline.hpp"
#include "bandit/sampler.hpp"
#include "bandit/trainer.hpp"

namespace bandit {

// Everything one closed-loop run produces. Deterministic: equal runs
// serialize to equal bytes.
struct RunReport {
  std::string bandit_id;
  std::string algorithm;
  uint64_t seed = 0;
  int64_t horizon = 0;

  double final_regret = 0.0;
  // Cumulative regret sampled every `curve_stride` steps (plus the final
  // step); curve_steps[i] is the 1-based step count the value covers.
  int64_t curve_stride = 1;
  std::vector<int64_t> curve_steps;
  std::vector<double> curve_regret;

  // Per-arm pull fractions over consecutive windows of pull_window steps.
  // Left empty when the arm space is too large to tabulate (> 256 arms).
  int64_t pull_window = 0;
  std::vector<std::vector<double>> pull_fractions;

  // Fraction of the final 10% of steps that played the environment's oracle
  // action (set equality for rankings).
  double oracle_match_final = 0.0;
  // Earliest step from which the oracle-match rate stays at or above 0.9
  // through the end of the run (suffixes shorter than 1% of the horizon or
  // 100 steps are ignored); -1 when no such step exists.
  int64_t convergence_step = -1;

  JoinCounters pipeline;
  TrainerCounters trainer;
  SamplerCounters sampler;
  int64_t final_param_version = 0;
  int64_t final_train_seq = 0;

  bool measured_latency = false;
  // Power-of-two microsecond buckets: [0,1), [1,2), [2,4), ... , overflow.
  std::vector<int64_t> latency_us_histogram;
};

std::string report_to_json(const RunReport& report);

struct ABReport {
  std::string bandit_id;
  std::string control_arm;
  int64_t n_per_side = 0;
  double treatment_mean = 0.0;
  double control_mean = 0.0;
  double uplift = 0.0;
  // Normal-approximation 95% interval on the uplift.
  double ci_low = 0.0;
  double ci_high = 0.0;
};

std::string ab_report_to_json(const ABReport& report);

// One sweep run flattened for the results table.
struct SweepRow {
  std::map<std::string, std::string> params;  // grid key -> JSON literal
  uint64_t seed = 0;
  double final_regret = 0.0;
  double oracle_match_final = 0.0;
  int64_t convergence_step = -1;
  std::string report_file;  // relative path of the per-run report
};

// Columns: sorted grid keys, then final_regret, oracle_match_final,
// convergence_step, seed, report. Values that embed commas or quotes are
// quoted per RFC 4180.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Minimal standalone line plot of one or more named regret curves.
struct SvgSeries {
  std::string label;
  std::vector<int64_t> xs;
  std::vector<double> ys;
};
std::string svg_line_plot(const std::string& title, const std::vector<SvgSeries>& series);

}  // namespace bandit
