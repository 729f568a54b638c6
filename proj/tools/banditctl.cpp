#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bandit/config_json.hpp"
#include "bandit/event_codec.hpp"
#include "bandit/framing.hpp"
#include "bandit/pipeline.hpp"
#include "bandit/report.hpp"
#include "bandit/service.hpp"
#include "bandit/simulator.hpp"
#include "bandit/store.hpp"

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bandit::fail(bandit::Errc::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) bandit::fail(bandit::Errc::IoError, "cannot write " + path);
  out << content;
  if (!out.flush()) bandit::fail(bandit::Errc::IoError, "short write to " + path);
}

// Exit 1 is for bad input the operator can fix; everything else is 2.
int exit_code_for(bandit::Errc code) {
  switch (code) {
    case bandit::Errc::InvalidConfig:
    case bandit::Errc::SchemaViolation:
    case bandit::Errc::MalformedRecord:
    case bandit::Errc::ImmutableFieldChanged:
    case bandit::Errc::AlreadyFrozen:
    case bandit::Errc::NotFrozen:
    case bandit::Errc::UnknownBandit:
    case bandit::Errc::UnknownArm:
    case bandit::Errc::UnknownFeature:
    case bandit::Errc::MissingFeature:
    case bandit::Errc::OutOfRange:
    case bandit::Errc::SpaceTooLarge:
    case bandit::Errc::EmptyArmSet:
    case bandit::Errc::KTooLarge:
    case bandit::Errc::LengthMismatch:
    case bandit::Errc::DimensionMismatch:
    case bandit::Errc::NonFiniteInput:
    case bandit::Errc::AlgorithmMismatch:
      return 1;
    default:
      return 2;
  }
}

bandit::SystemClock g_clock;

bandit::BanditStore open_store(const std::string& data_dir) {
  return bandit::BanditStore(data_dir + "/store", bandit::StoreOptions{}, &g_clock);
}

int cmd_serve(const std::string& data_dir, const bandit::ServiceOptions& options) {
  // Block the shutdown signals before the service spawns its threads so they
  // inherit the mask and sigwait below is the only consumer.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  bandit::PlatformService service(data_dir, options);
  service.start();
  const int port = service.started();
  std::cout << "serving " << data_dir << " on port " << port << std::endl;

  int sig = 0;
  sigwait(&set, &sig);
  std::cout << "caught " << (sig == SIGINT ? "SIGINT" : "SIGTERM") << ", shutting down"
            << std::endl;
  service.stop();
  return 0;
}

int cmd_create(const std::string& data_dir, const std::string& config_file) {
  bandit::BanditStore store = open_store(data_dir);
  const bandit::BanditConfig config = bandit::config_from_json(slurp(config_file));
  const uint64_t param_version = store.put_config(config);
  const bandit::BanditInfo info = store.get_info(config.bandit_id);
  json out = {{"bandit_id", config.bandit_id},
              {"config_version", info.config_version},
              {"param_version", param_version}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_freeze(const std::string& data_dir, const std::string& bandit_id) {
  bandit::BanditStore store = open_store(data_dir);
  const uint64_t config_version = store.freeze(bandit_id);
  json out = {{"bandit_id", bandit_id}, {"status", "frozen"}, {"config_version", config_version}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_simulate(const std::string& out_dir, const std::string& config_file,
                 const std::string& env_file, int64_t horizon, uint64_t seed, bool svg,
                 bool measure_latency) {
  bandit::SimulationSpec spec;
  spec.config = bandit::config_from_json(slurp(config_file));
  spec.env = bandit::environment_from_json(slurp(env_file));
  spec.horizon = horizon;
  spec.seed = seed;
  spec.measure_latency = measure_latency;

  // A run is only reproducible from a clean slate; refuse to train on top of
  // a bandit someone already created here.
  const std::string store_log = out_dir + "/store/" + spec.config.bandit_id + ".log";
  if (std::filesystem::exists(store_log)) {
    bandit::fail(bandit::Errc::InvalidConfig,
                 "bandit '" + spec.config.bandit_id + "' already exists under " + out_dir +
                     "; point --out at a fresh directory");
  }

  const bandit::RunReport report = bandit::run_experiment(out_dir, spec);

  std::filesystem::create_directories(out_dir + "/reports");
  const std::string stem =
      out_dir + "/reports/" + report.bandit_id + "-seed" + std::to_string(seed);
  write_file(stem + ".json", bandit::report_to_json(report));
  if (svg) {
    bandit::SvgSeries series{report.bandit_id, report.curve_steps, report.curve_regret};
    write_file(stem + ".svg", bandit::svg_line_plot("cumulative regret", {series}));
  }

  json out = {{"bandit_id", report.bandit_id},
              {"horizon", report.horizon},
              {"seed", report.seed},
              {"final_regret", report.final_regret},
              {"oracle_match_final", report.oracle_match_final},
              {"convergence_step", report.convergence_step},
              {"applied_batches", report.trainer.applied_batches},
              {"report", stem + ".json"}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_sweep(const std::string& grid_file, const std::string& out_dir, int64_t seeds_override) {
  bandit::SweepSpec spec = bandit::sweep_spec_from_json(slurp(grid_file));
  if (seeds_override > 0) {
    spec.seeds.clear();
    for (int64_t s = 1; s <= seeds_override; ++s) {
      spec.seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  const bandit::SweepResult result = bandit::run_sweep(out_dir, spec);
  json out = {{"runs", result.rows.size()}, {"csv", result.csv_file}};
  if (!result.svg_file.empty()) out["svg"] = result.svg_file;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_inspect(const std::string& data_dir, const std::string& bandit_id) {
  bandit::BanditStore store = open_store(data_dir);
  const bandit::BanditInfo info = store.get_info(bandit_id);
  const bandit::ParamDocument params = store.get_params(bandit_id);

  const std::string logs_dir = data_dir + "/logs";
  size_t impressions = 0, rewards = 0, watermarks = 0, examples = 0;
  impressions = bandit::read_log(bandit::EventLog::impressions_path(logs_dir, bandit_id)).size();
  for (const auto& rec : bandit::read_log(bandit::EventLog::rewards_path(logs_dir, bandit_id))) {
    (bandit::record_type(rec) == "watermark" ? watermarks : rewards) += 1;
  }
  const auto batches = bandit::read_log(bandit::EventLog::batches_path(logs_dir, bandit_id));
  for (const auto& rec : batches) examples += bandit::decode_batch(rec).examples.size();

  json out = {{"bandit_id", bandit_id},
              {"config", json::parse(bandit::config_to_json(info.config))},
              {"config_version", info.config_version},
              {"param_version", info.param_version},
              {"train_seq", info.train_seq},
              {"algorithm", params.algorithm},
              {"params_updated_at_ms", params.updated_at_ms},
              {"logs",
               {{"impressions", impressions},
                {"rewards", rewards},
                {"watermarks", watermarks},
                {"batches", batches.size()},
                {"batched_examples", examples}}}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_replay(const std::string& data_dir, const std::string& bandit_id,
               const bandit::FlushPolicy& flush) {
  bandit::BanditStore store = open_store(data_dir);
  const bandit::BanditConfig config = store.get_config(bandit_id);
  const std::string logs_dir = data_dir + "/logs";

  const std::vector<std::string> recorded =
      bandit::read_log(bandit::EventLog::batches_path(logs_dir, bandit_id));
  const std::vector<bandit::TrainingBatch> derived =
      bandit::replay_batches(logs_dir, config, flush);

  bool identical = derived.size() == recorded.size();
  size_t first_diff = 0;
  for (size_t i = 0; identical && i < derived.size(); ++i) {
    if (bandit::encode_batch(derived[i]) != recorded[i]) {
      identical = false;
      first_diff = i;
    }
  }
  std::cout << "recorded batches: " << recorded.size() << "\n"
            << "derived batches:  " << derived.size() << "\n"
            << "batches identical: " << (identical ? "true" : "false") << std::endl;
  if (!identical && !recorded.empty() && derived.size() == recorded.size()) {
    std::cerr << "first divergence at batch seq " << derived[first_diff].seq << std::endl;
  }
  return identical ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bandit platform control: serve, configure, simulate, and audit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // serve ------------------------------------------------------------------
  auto opts = bandit::ServiceOptions::from_env();
  std::string serve_data = "./data";
  int64_t refresh_secs = std::chrono::duration_cast<std::chrono::seconds>(
                             opts.sampler.refresh_period)
                             .count();
  int64_t ttl_secs =
      std::chrono::duration_cast<std::chrono::seconds>(opts.sampler.session_ttl).count();
  CLI::App* serve = app.add_subcommand("serve", "run the decision service on a data directory");
  serve->add_option("--data", serve_data, "data directory (store/, logs/)")
      ->capture_default_str();
  serve->add_option("--port", opts.port, "listen port, 0 picks a free one")
      ->capture_default_str();
  serve->add_option("--refresh-secs", refresh_secs, "parameter snapshot refresh period")
      ->capture_default_str();
  serve->add_option("--ttl-secs", ttl_secs, "session decision cache TTL")
      ->capture_default_str();
  serve->add_option("--cache-cap", opts.sampler.cache_capacity, "session cache capacity")
      ->capture_default_str();
  serve->add_option("--workers", opts.trainer_workers, "trainer worker threads")
      ->capture_default_str();
  serve->add_option("--max-examples", opts.flush.max_examples, "batch size bound")
      ->capture_default_str();
  serve->add_option("--max-wait-ms", opts.flush.max_wait_ms,
                    "batch age bound in event-time ms")
      ->capture_default_str();
  serve->add_flag("--fsync", opts.fsync, "fsync every log append");

  // create-bandit ------------------------------------------------------------
  std::string create_data = "./data";
  std::string config_file;
  CLI::App* create = app.add_subcommand("create-bandit", "register a bandit from a config file");
  create->add_option("--data", create_data, "data directory")->capture_default_str();
  create->add_option("--config", config_file, "bandit config JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  // freeze -------------------------------------------------------------------
  std::string freeze_data = "./data";
  std::string freeze_id;
  CLI::App* freeze = app.add_subcommand("freeze", "stop learning and pin current parameters");
  freeze->add_option("--data", freeze_data, "data directory")->capture_default_str();
  freeze->add_option("--bandit-id", freeze_id, "bandit to freeze")->required();

  // simulate -----------------------------------------------------------------
  std::string sim_config, sim_env, sim_out = "./data";
  int64_t sim_horizon = 0;
  uint64_t sim_seed = 1;
  bool sim_svg = false, sim_latency = false;
  CLI::App* simulate =
      app.add_subcommand("simulate", "closed-loop run against a synthetic environment");
  simulate->add_option("--config", sim_config, "bandit config JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--env", sim_env, "environment JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--horizon", sim_horizon, "steps to run (one simulated second each)")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "run seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "fresh data directory for the run")
      ->capture_default_str();
  simulate->add_flag("--svg", sim_svg, "also write a regret-curve SVG");
  simulate->add_flag("--measure-latency", sim_latency, "record a decision latency histogram");

  // sweep --------------------------------------------------------------------
  std::string sweep_grid, sweep_out = "./sweep";
  int64_t sweep_seeds = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "grid of simulations from a sweep file");
  sweep->add_option("--grid", sweep_grid, "sweep spec JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--seeds", sweep_seeds, "run seeds 1..N, overriding the file")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();

  // inspect ------------------------------------------------------------------
  std::string inspect_data = "./data";
  std::string inspect_id;
  CLI::App* inspect = app.add_subcommand("inspect", "dump a bandit's config, versions, and logs");
  inspect->add_option("--data", inspect_data, "data directory")->capture_default_str();
  inspect->add_option("--bandit-id", inspect_id, "bandit to inspect")->required();

  // replay -------------------------------------------------------------------
  std::string replay_data = "./data";
  std::string replay_id;
  bandit::FlushPolicy replay_flush;
  CLI::App* replay =
      app.add_subcommand("replay", "re-derive batches from the logs and verify determinism");
  replay->add_option("--data", replay_data, "data directory")->capture_default_str();
  replay->add_option("--bandit-id", replay_id, "bandit to replay")->required();
  replay->add_option("--max-examples", replay_flush.max_examples,
                     "batch size bound used by the original run")
      ->capture_default_str();
  replay->add_option("--max-wait-ms", replay_flush.max_wait_ms,
                     "batch age bound used by the original run")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (serve->parsed()) {
      opts.sampler.refresh_period = std::chrono::seconds(refresh_secs);
      opts.sampler.session_ttl = std::chrono::seconds(ttl_secs);
      return cmd_serve(serve_data, opts);
    }
    if (create->parsed()) return cmd_create(create_data, config_file);
    if (freeze->parsed()) return cmd_freeze(freeze_data, freeze_id);
    if (simulate->parsed()) {
      return cmd_simulate(sim_out, sim_config, sim_env, sim_horizon, sim_seed, sim_svg,
                          sim_latency);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_grid, sweep_out, sweep_seeds);
    if (inspect->parsed()) return cmd_inspect(inspect_data, inspect_id);
    if (replay->parsed()) return cmd_replay(replay_data, replay_id, replay_flush);
  } catch (const bandit::BanditError& e) {
    std::cerr << "error [" << bandit::errc_name(e.code()) << "]: " << e.what() << std::endl;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
