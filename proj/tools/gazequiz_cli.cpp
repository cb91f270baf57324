#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "gazequiz/app_config.hpp"
#include "gazequiz/error.hpp"
#include "gazequiz/evaluation.hpp"
#include "gazequiz/log.hpp"
#include "gazequiz/net/websocket_server.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/session_host.hpp"
#include "gazequiz/simulation.hpp"
#include "gazequiz/stats.hpp"
#include "gazequiz/store.hpp"

using namespace gazequiz;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

/// --config, then $GAZEQUIZ_CONFIG, then the shipped data directory.
AppConfig config_or_default(const std::string& path) {
  if (!path.empty()) return load_app_config(path);
  if (const char* env = std::getenv("GAZEQUIZ_CONFIG"); env != nullptr && *env != '\0') return load_app_config(env);
  const fs::path shipped = fs::path(GAZEQUIZ_DATA_DIR) / "config.json";
  if (fs::exists(shipped)) return load_app_config(shipped.string());
  AppConfig c;
  c.dictionary = "data/words_ja.txt";
  return c;
}

int serve(const std::string& config_path, const std::string& address, int port, int threads) {
  AppConfig config = config_or_default(config_path);
  if (!address.empty()) config.server.address = address;
  if (port >= 0) config.server.port = static_cast<std::uint16_t>(port);
  const AppContext app = build_app_context(config);
  static SessionStore store = SessionStore::create(config.server.store_root, *app.board, config.normalization);

  RuntimeContext base;
  base.engine = app.engine;
  base.capture = app.capture;
  base.store = &store;
  base.seed = config.server.seed;
  base.grace_ms = static_cast<std::int64_t>(config.server.grace_s * 1000.0);
  auto host = std::make_shared<SessionHost>(base);

  net::ServerOptions options;
  options.address = config.server.address;
  options.port = config.server.port;
  options.tick_ms = config.server.tick_ms;
  options.threads = threads;
  net::WebSocketServer server(options, host);
  server.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  return 0;
}

std::vector<GazeSample> load_samples(const std::string& store_dir) { return SessionStore::open(store_dir).samples(); }

int evaluate(const std::string& store_dir, const std::string& eyetracker, const std::string& condition,
             std::optional<double> remove_z, const std::string& compare, const std::string& out_dir,
             const std::string& basis) {
  const SessionStore store = SessionStore::open(store_dir);
  const auto samples = store.samples();
  const auto records = load_eval_records(eyetracker);
  ReportOptions options;
  options.remove_outliers_z = remove_z;
  if (basis == "estimator") options.basis = OutlierBasis::estimator;
  if (basis == "reference") options.basis = OutlierBasis::reference;

  std::vector<ConditionReport> reports;
  reports.push_back(build_condition_report(evaluate_condition(samples, records, store.layout(), condition), options));
  std::optional<Comparison> comparison;
  if (!compare.empty()) {
    reports.push_back(build_condition_report(evaluate_condition(samples, records, store.layout(), compare), options));
    comparison = compare_conditions(reports[0], reports[1]);
  }
  if (!out_dir.empty()) write_report_files(out_dir, reports, comparison);
  std::cout << report_to_json(reports[0], comparison).dump(2) << '\n';
  return 0;
}

int simulate_batch_cmd(const std::string& config_path, BatchOptions options, const std::string& eyetracker_out) {
  const AppConfig config = config_or_default(config_path);
  const BatchResult r = simulate_batch(config, options);
  if (!eyetracker_out.empty()) {
    std::ofstream out(eyetracker_out);
    write_eval_records(out, r.records);
  }
  const auto board = build_app_context(config).board;
  const auto eval = evaluate_condition(r.samples, r.records, *board, std::string(to_string(options.mode)));
  std::vector<double> errors;
  for (const auto& s : eval.samples) errors.push_back(s.error_deg);
  nlohmann::ordered_json j;
  j["sessions"] = r.games.size();
  j["words"] = r.words;
  j["samples"] = r.samples.size();
  j["records"] = r.records.size();
  j["samples_without_approval"] = r.samples_without_approval;
  j["mean_reference_error_deg"] = errors.empty() ? 0.0 : stats::mean(errors);
  j["expected_error_deg"] = expected_angular_noise_deg(options.gaze_sigma_deg);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int simulate_population_cmd(const std::string& config_path, const std::string& store_dir, PopulationOptions options) {
  const AppConfig config = config_or_default(config_path);
  const AppContext app = build_app_context(config);
  SessionStore store = SessionStore::create(store_dir, *app.board, config.normalization);
  const PopulationResult r = simulate_population(config, store, options);
  nlohmann::ordered_json j;
  j["sessions"] = r.sessions;
  j["participants"] = r.participants.size();
  j["staff"] = r.staff.size();
  j["unsaved"] = r.unsaved;
  j["stored_samples"] = store.sample_count();
  std::cout << j.dump(2) << '\n';
  return 0;
}

int export_cmd(const std::string& store_dir, const std::string& out, const std::string& filter, const std::string& id) {
  const SessionStore store = SessionStore::open(store_dir);
  ExportOptions options;
  options.filter = export_filter_from_string(filter);
  options.dataset_id = id;
  const ExportResult r = export_dataset(store, out, options);
  std::cout << r.manifest_path.string() << ": " << r.records << " records\n";
  return 0;
}

int split_cmd(const std::string& store_dir, int k, std::uint64_t seed, std::size_t draw, const std::string& out) {
  const SessionStore store = SessionStore::open(store_dir);
  std::vector<Participant> participants;
  for (const auto& p : store.participants()) {
    if (!p.exclude_from_dataset) participants.push_back(p);
  }
  std::vector<GazeSample> pool;
  for (const auto& s : store.samples()) {
    const auto p = store.participant(s.participant_id);
    if (p && passes_filter(s, *p, ExportFilter::training)) pool.push_back(s);
  }
  const FoldSplit split = make_fold_split(participants, k, seed, pool, draw);
  const std::string text = fold_split_to_json(split).dump(2);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream(out) << text << '\n';
  }
  return 0;
}

int replay_log_cmd(const std::string& config_path, const std::string& events_path) {
  const AppContext app = build_app_context(config_or_default(config_path));
  std::ifstream in(events_path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + events_path);
  const auto log = read_event_log(in);
  const GameSession s = app.engine->replay(log);
  nlohmann::ordered_json j;
  j["events"] = log.size();
  j["phase"] = to_string(s.phase);
  j["score"] = s.score;
  j["finish_reason"] = s.finish_reason;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int replay_trace_cmd(const std::string& config_path, const std::string& trace_path, const std::string& session_id,
                     std::optional<std::uint64_t> seed) {
  const AppConfig config = config_or_default(config_path);
  const AppContext app = build_app_context(config);
  std::ifstream in(trace_path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + trace_path);
  RuntimeContext ctx;
  ctx.engine = app.engine;
  ctx.capture = app.capture;
  ctx.seed = seed ? *seed : derive_seed(config.server.seed, session_id);
  ctx.grace_ms = static_cast<std::int64_t>(config.server.grace_s * 1000.0);
  const auto runtime = replay_trace(session_id, ctx, read_trace(in));
  write_event_log(std::cout, runtime->event_log());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazequiz: gamified gaze data collection and label-accuracy evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  auto* serve_cmd = app.add_subcommand("serve", "run the game server");
  std::string address;
  int port = -1;
  int threads = 2;
  serve_cmd->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--address", address, "listen address (overrides config)");
  serve_cmd->add_option("--port", port, "listen port (overrides config)");
  serve_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* eval_cmd = app.add_subcommand("evaluate", "label accuracy against eye-tracker records");
  std::string store_dir;
  std::string eyetracker;
  std::string condition;
  std::optional<double> remove_z;
  std::string compare;
  std::string out_dir;
  std::string basis = "automatic";
  eval_cmd->add_option("--store", store_dir, "session store directory")->required();
  eval_cmd->add_option("--eyetracker", eyetracker, "eye-tracker records (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--condition", condition, "gamified or standard")->required();
  eval_cmd->add_option("--remove-outliers", remove_z, "re-aggregate without samples beyond this z-score");
  eval_cmd->add_option("--compare", compare, "second condition for the Mann-Whitney test");
  eval_cmd->add_option("--out", out_dir, "directory for report.json and the tables");
  eval_cmd->add_option("--outlier-basis", basis, "automatic, estimator or reference")
      ->check(CLI::IsMember({"automatic", "estimator", "reference"}));

  auto* sim_cmd = app.add_subcommand("simulate", "synthetic sessions");
  sim_cmd->require_subcommand(1);
  auto* batch_cmd = sim_cmd->add_subcommand("batch", "play sessions with bots and synthetic cameras");
  BatchOptions batch;
  std::string mode = "gamified";
  std::string eyetracker_out;
  batch_cmd->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  batch_cmd->add_option("--mode", mode, "gamified or standard")->check(CLI::IsMember({"gamified", "standard"}));
  batch_cmd->add_option("--sessions", batch.sessions, "number of sessions");
  batch_cmd->add_option("--sigma", batch.gaze_sigma_deg, "subject fixation noise, degrees RMS");
  batch_cmd->add_option("--estimator-noise", batch.estimator_noise_deg, "synthetic estimator noise, degrees RMS");
  batch_cmd->add_option("--seed", batch.seed, "random seed");
  batch_cmd->add_option("--store", batch.store_root, "keep the sessions in this store");
  batch_cmd->add_option("--eyetracker-out", eyetracker_out, "write eye-tracker records here");
  auto* pop_cmd = sim_cmd->add_subcommand("population", "pair visitors into gamified sessions");
  PopulationOptions population;
  std::string pop_store;
  pop_cmd->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  pop_cmd->add_option("--store", pop_store, "session store directory")->required();
  pop_cmd->add_option("--participants", population.participants, "visitors");
  pop_cmd->add_option("--wearers", population.eyetracker_wearers, "visitors wearing the eye tracker");
  pop_cmd->add_option("--lost", population.lost_samples, "samples lost to write failures");
  pop_cmd->add_option("--seed", population.seed, "random seed");

  auto* exp_cmd = app.add_subcommand("export", "write a training dataset");
  std::string export_out;
  std::string filter = "training";
  std::string dataset_id = "gazequiz";
  exp_cmd->add_option("--store", store_dir, "session store directory")->required();
  exp_cmd->add_option("--out", export_out, "output directory")->required();
  exp_cmd->add_option("--filter", filter, "training, eyetracker or all")->check(CLI::IsMember({"training", "eyetracker", "all"}));
  exp_cmd->add_option("--dataset-id", dataset_id, "identifier written to the manifest");

  auto* imp_cmd = app.add_subcommand("import", "rebuild a store from an exported dataset");
  std::string import_dir;
  imp_cmd->add_option("--dataset", import_dir, "export directory")->required()->check(CLI::ExistingDirectory);
  imp_cmd->add_option("--store", store_dir, "new store directory")->required();

  auto* split_sub = app.add_subcommand("split", "participant folds for fine-tuning");
  int k = 3;
  std::uint64_t split_seed = 1;
  std::size_t draw = 15;
  std::string split_out;
  split_sub->add_option("--store", store_dir, "session store directory")->required();
  split_sub->add_option("--k", k, "number of folds")->check(CLI::PositiveNumber);
  split_sub->add_option("--seed", split_seed, "random seed");
  split_sub->add_option("--draw", draw, "fine-tuning images drawn per fold");
  split_sub->add_option("--out", split_out, "write JSON here instead of stdout");

  auto* rlog_cmd = app.add_subcommand("replay-log", "rebuild a session from its event log and check every event");
  std::string events_path;
  rlog_cmd->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  rlog_cmd->add_option("--events", events_path, "events.jsonl")->required()->check(CLI::ExistingFile);

  auto* rtrace_cmd = app.add_subcommand("replay-trace", "re-run a recorded client message trace");
  std::string trace_path;
  std::string session_id;
  std::optional<std::uint64_t> trace_seed;
  rtrace_cmd->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  rtrace_cmd->add_option("--trace", trace_path, "trace file (JSONL)")->required()->check(CLI::ExistingFile);
  rtrace_cmd->add_option("--session", session_id, "session id")->required();
  rtrace_cmd->add_option("--seed", trace_seed, "runtime seed; derived from server.seed by default");

  CLI11_PARSE(app, argc, argv);

  log::set_min_level(log_level == "debug" ? log::Level::debug
                     : log_level == "warn" ? log::Level::warn
                     : log_level == "error" ? log::Level::error
                                            : log::Level::info);
  try {
    if (*serve_cmd) return serve(config_path, address, port, threads);
    if (*eval_cmd) return evaluate(store_dir, eyetracker, condition, remove_z, compare, out_dir, basis);
    if (*batch_cmd) {
      log::set_sink(nullptr);
      batch.mode = mode_from_string(mode);
      return simulate_batch_cmd(config_path, batch, eyetracker_out);
    }
    if (*pop_cmd) {
      log::set_sink(nullptr);
      return simulate_population_cmd(config_path, pop_store, population);
    }
    if (*exp_cmd) return export_cmd(store_dir, export_out, filter, dataset_id);
    if (*imp_cmd) {
      const SessionStore s = import_dataset(import_dir, store_dir);
      std::cout << s.sample_count() << " samples imported into " << store_dir << '\n';
      return 0;
    }
    if (*split_sub) return split_cmd(store_dir, k, split_seed, draw, split_out);
    if (*rlog_cmd) return replay_log_cmd(config_path, events_path);
    if (*rtrace_cmd) return replay_trace_cmd(config_path, trace_path, session_id, trace_seed);
  } catch (const Error& e) {
    std::cerr << "gazequiz: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gazequiz: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
