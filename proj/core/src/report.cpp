#include "bandit/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace bandit {

namespace {

using nlohmann::json;

json counters_json(const JoinCounters& c) {
  json j;
  j["impressions"] = c.impressions;
  j["rewards"] = c.rewards;
  j["matched"] = c.matched;
  j["expired_defaulted"] = c.expired_defaulted;
  j["expired_dropped"] = c.expired_dropped;
  j["discarded_rewards"] = c.discarded_rewards;
  j["examples"] = c.examples;
  return j;
}

json counters_json(const TrainerCounters& c) {
  json j;
  j["applied_batches"] = c.applied_batches;
  j["poisoned_examples"] = c.poisoned_examples;
  j["skipped_replay"] = c.skipped_replay;
  j["dropped_frozen"] = c.dropped_frozen;
  j["cas_conflicts"] = c.cas_conflicts;
  return j;
}

json counters_json(const SamplerCounters& c) {
  json j;
  j["samples"] = c.samples;
  j["cache_hits"] = c.cache_hits;
  j["cache_misses"] = c.cache_misses;
  j["overload_rejections"] = c.overload_rejections;
  j["refresh_failures"] = c.refresh_failures;
  return j;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string report_to_json(const RunReport& r) {
  json j;
  j["bandit_id"] = r.bandit_id;
  j["algorithm"] = r.algorithm;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  j["final_regret"] = r.final_regret;
  j["curve_stride"] = r.curve_stride;
  j["curve_steps"] = r.curve_steps;
  j["curve_regret"] = r.curve_regret;
  j["pull_window"] = r.pull_window;
  j["pull_fractions"] = r.pull_fractions;
  j["oracle_match_final"] = r.oracle_match_final;
  j["convergence_step"] = r.convergence_step;
  j["pipeline"] = counters_json(r.pipeline);
  j["trainer"] = counters_json(r.trainer);
  j["sampler"] = counters_json(r.sampler);
  j["final_param_version"] = r.final_param_version;
  j["final_train_seq"] = r.final_train_seq;
  if (r.measured_latency) j["latency_us_histogram"] = r.latency_us_histogram;
  return j.dump(2) + "\n";
}

std::string ab_report_to_json(const ABReport& r) {
  json j;
  j["bandit_id"] = r.bandit_id;
  j["control_arm"] = r.control_arm;
  j["n_per_side"] = r.n_per_side;
  j["treatment_mean"] = r.treatment_mean;
  j["control_mean"] = r.control_mean;
  j["uplift"] = r.uplift;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::set<std::string> keys;
  for (const auto& row : rows) {
    for (const auto& [k, v] : row.params) {
      (void)v;
      keys.insert(k);
    }
  }
  std::ostringstream out;
  for (const auto& k : keys) out << csv_escape(k) << ",";
  out << "final_regret,oracle_match_final,convergence_step,seed,report\n";
  for (const auto& row : rows) {
    for (const auto& k : keys) {
      auto it = row.params.find(k);
      out << (it == row.params.end() ? "" : csv_escape(it->second)) << ",";
    }
    out << row.final_regret << "," << row.oracle_match_final << "," << row.convergence_step << ","
        << row.seed << "," << csv_escape(row.report_file) << "\n";
  }
  return out.str();
}

std::string svg_line_plot(const std::string& title, const std::vector<SvgSeries>& series) {
  constexpr double kW = 720, kH = 420;
  constexpr double kL = 60, kR = 20, kT = 40, kB = 40;  // margins
  double x_max = 1, y_max = 1;
  for (const auto& s : series) {
    for (int64_t x : s.xs) x_max = std::max(x_max, static_cast<double>(x));
    for (double y : s.ys) {
      if (std::isfinite(y)) y_max = std::max(y_max, y);
    }
  }
  const auto px = [&](double x) { return kL + (kW - kL - kR) * x / x_max; };
  const auto py = [&](double y) { return kH - kB - (kH - kT - kB) * y / y_max; };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"15\">" << title << "</text>\n";
  svg << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
      << kH - kB << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kL - 8 << "\" y=\"" << kT + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << y_max
      << "</text>\n";
  svg << "<text x=\"" << kW - kR << "\" y=\"" << kH - kB + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << x_max
      << "</text>\n";

  std::size_t color = 0;
  double legend_y = kT + 8;
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << kColors[color % 8] << "\" stroke-width=\"1.5\""
        << " points=\"";
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      svg << px(static_cast<double>(s.xs[i])) << "," << py(s.ys[i]) << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kL + 10 << "\" y=\"" << legend_y << "\" font-family=\"sans-serif\""
        << " font-size=\"11\" fill=\"" << kColors[color % 8] << "\">" << s.label << "</text>\n";
    legend_y += 14;
    color += 1;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace bandit
