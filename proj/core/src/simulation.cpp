#include "gazequiz/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

#include "gazequiz/error.hpp"
#include "gazequiz/geometry.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/synthetic.hpp"

namespace gazequiz {

namespace fs = std::filesystem;

namespace {

Vec2 project(const CameraIntrinsics& k, const Vec3& p_cam) {
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

std::string numbered(const char* prefix, std::size_t n, int width = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

class Bots {
 public:
  Bots(SessionRuntime& rt, Mode mode, const std::vector<PlayerSpec>& players, const BotPolicy& policy,
       std::uint64_t seed, std::int64_t now)
      : rt_(rt), mode_(mode), specs_(players), policy_(policy), rng_(seed), now_(now), tokens_(players.size()) {}

  SimulatedGame run() {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      nlohmann::json payload{{"mode", to_string(mode_)},
                             {"wearing_eyetracker", specs_[i].wearing_eyetracker},
                             {"exclude_from_dataset", specs_[i].exclude_from_dataset}};
      send(i, ClientKind::join, std::move(payload));
      if (tokens_[i].empty()) throw Error(ErrorCode::ProtocolViolation, "join was not accepted");
    }
    for (std::size_t i = 0; i < specs_.size(); ++i) send(i, ClientKind::start);

    std::set<std::size_t> briefed;
    for (int guard = 0; !rt_.finished() && guard < 200000; ++guard) {
      disturb();
      const std::string phase = view(0).value("phase", "");
      if (phase == "briefing") {
        for (std::size_t i = 0; i < specs_.size(); ++i) {
          if (briefed.insert(i).second) {
            think();
            send(i, ClientKind::ready);
          }
        }
      } else if (phase == "answerer_review") {
        think();
        send(answerer(), ClientKind::ready);
      } else if (phase == "await_capture_trigger" || phase == "await_trigger") {
        rejects_ = 0;
        think();
        send(questioner(), ClientKind::trigger_capture);
      } else if (phase == "countdown" || phase == "capturing") {
        wait(policy_.tick_ms);
      } else if (phase == "await_approval") {
        think();
        if (rejects_ < policy_.max_rejects && rng_.bernoulli(policy_.reject_rate)) {
          ++rejects_;
          send(questioner(), ClientKind::reject_capture);
        } else {
          rejects_ = 0;
          send(questioner(), ClientKind::approve_capture);
        }
      } else if (phase == "answerer_marking") {
        think();
        if (rng_.bernoulli(policy_.mark_rate)) {
          const auto& w = view(questioner()).at("word");
          const std::size_t cursor = w.at("letter_cursor").get<std::size_t>();
          const auto& ids = w.at("letter_ids");
          if (cursor < ids.size()) {
            const Vec3 p = letter_position(rt_.engine().board(), ids[cursor].get<std::string>());
            const double n = policy_.mark_noise_mm;
            send(answerer(), ClientKind::mark,
                 {{"board_xy_mm", {p.x() + n * rng_.normal(), p.y() + n * rng_.normal()}}});
          }
        }
        send(answerer(), ClientKind::ready);
      } else if (phase == "answering") {
        if (rng_.bernoulli(policy_.timeout_rate)) {
          while (!rt_.finished() && view(0).value("phase", "") == "answering") wait(policy_.tick_ms);
          continue;
        }
        think();
        if (view(0).value("phase", "") != "answering") continue;
        std::string answer = "まちがい";
        if (rng_.bernoulli(policy_.correct_rate)) {
          answer.clear();
          for (const auto& g : view(questioner()).at("word").at("glyphs")) answer += g.get<std::string>();
        }
        send(answerer(), ClientKind::answer, {{"answer", answer}});
      } else if (phase == "reveal") {
        think();
        send(answerer(), ClientKind::proceed);
      } else {
        break;
      }
    }

    SimulatedGame g;
    g.session_id = rt_.session_id();
    g.tokens = tokens_;
    for (const auto& t : tokens_) g.participant_ids.push_back(rt_.participant_for_token(t).value_or(""));
    g.log = rt_.event_log();
    g.trace = rt_.trace();
    g.messages = std::move(messages_);
    for (const auto& e : g.log) {
      if (e.kind == EventKind::capture_approved) g.approved_captures.push_back(e.payload.at("capture_id").get<std::string>());
      if (e.kind == EventKind::finished) {
        g.finish_reason = e.payload.at("reason").get<std::string>();
        g.score = e.payload.at("score").get<int>();
      }
    }
    g.unsaved = rt_.unsaved_captures();
    g.errors = errors_;
    g.end_ms = now_;
    return g;
  }

 private:
  const nlohmann::json& view(std::size_t i) const {
    static const nlohmann::json empty = nlohmann::json::object();
    const auto it = views_.find(tokens_.at(i));
    return it == views_.end() ? empty : it->second;
  }

  std::size_t with_role(const char* role) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (view(i).at("you").value("role", "") == role) return i;
    }
    return 0;
  }
  std::size_t questioner() const { return mode_ == Mode::standard ? 0 : with_role("questioner"); }
  std::size_t answerer() const { return with_role("answerer"); }

  void absorb(std::vector<Outbound> out, std::size_t sender, bool stray) {
    for (auto& o : out) {
      if (o.recipient.empty()) o.recipient = tokens_[sender];
      if (o.message.kind == ServerKind::state_snapshot) {
        const auto& you = o.message.payload.at("you");
        const std::string token = you.at("token").get<std::string>();
        if (tokens_[sender].empty() && std::find(tokens_.begin(), tokens_.end(), token) == tokens_.end()) {
          tokens_[sender] = token;
          if (o.recipient.empty()) o.recipient = token;
        }
        views_[o.recipient] = o.message.payload;
      }
      if (o.message.kind == ServerKind::error && !stray) ++errors_;
      messages_.push_back(std::move(o));
    }
  }

  void send(std::size_t i, ClientKind kind, nlohmann::json payload = nlohmann::json::object(), bool stray = false) {
    ClientMessage m;
    m.kind = kind;
    m.session_id = rt_.session_id();
    m.token = kind == ClientKind::join ? std::string() : tokens_[i];
    m.payload = std::move(payload);
    absorb(rt_.handle_text(format_client_message(m), now_), i, stray);
  }

  void wait(std::int64_t ms) {
    const std::int64_t target = now_ + std::max<std::int64_t>(ms, 1);
    while (now_ < target && !rt_.finished()) {
      now_ = std::min(now_ + policy_.tick_ms, target);
      absorb(rt_.tick(now_), 0, false);
    }
  }

  void think() {
    const auto span = static_cast<std::uint64_t>(std::max<std::int64_t>(0, policy_.max_think_ms - policy_.min_think_ms));
    wait(policy_.min_think_ms + static_cast<std::int64_t>(rng_.uniform_index(span + 1)));
  }

  void disturb() {
    if (policy_.disconnect_rate > 0.0 && rng_.bernoulli(policy_.disconnect_rate)) {
      const std::size_t i = rng_.uniform_index(tokens_.size());
      absorb(rt_.disconnect(tokens_[i], now_), i, false);
      wait(1 + static_cast<std::int64_t>(rng_.uniform_index(static_cast<std::uint64_t>(policy_.max_disconnect_ms))));
      if (rt_.finished()) return;
      ClientMessage m;
      m.kind = ClientKind::join;
      m.session_id = rt_.session_id();
      m.token = tokens_[i];
      absorb(rt_.handle_text(format_client_message(m), now_), i, false);
    }
    if (policy_.stray_rate > 0.0 && rng_.bernoulli(policy_.stray_rate)) {
      const std::size_t i = rng_.uniform_index(tokens_.size());
      switch (rng_.uniform_index(4)) {
        case 0:
          absorb(rt_.handle_text("{\"v\":1,\"kind\":", now_), i, true);
          break;
        case 1:
          send(i, ClientKind::answer, {{"answer", "?"}}, true);
          break;
        case 2:
          send(i, ClientKind::approve_capture, nlohmann::json::object(), true);
          break;
        default:
          send(i, ClientKind::start, nlohmann::json::object(), true);
          break;
      }
    }
  }

  SessionRuntime& rt_;
  Mode mode_;
  std::vector<PlayerSpec> specs_;
  BotPolicy policy_;
  Rng rng_;
  std::int64_t now_;
  std::vector<std::string> tokens_;
  std::map<std::string, nlohmann::json> views_;
  std::vector<Outbound> messages_;
  std::size_t errors_ = 0;
  int rejects_ = 0;
};

}  // namespace

EvalRecord synthesize_eval_record(const std::string& sample_id, const std::string& participant_id,
                                  const Vec3& eye_board_mm, const Vec3& gaze_dir_board, const EyeTrackerModel& model,
                                  Rng& rng) {
  const Vec3 dir = gaze_dir_board.normalized();
  if (std::abs(dir.z()) < 1e-9) throw Error(ErrorCode::DegenerateGeometry, "gaze ray parallel to the board");
  const double s = -eye_board_mm.z() / dir.z();
  if (!(s > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "gaze ray points away from the board");
  const Vec3 hit = eye_board_mm + s * dir;

  const Vec3 origin = eye_board_mm + model.camera_offset_mm;
  const CameraPose pose = CameraPose::look_at(origin, Vec3::Zero());

  EvalRecord r;
  r.sample_id = sample_id;
  r.participant_id = participant_id;
  r.scene_intrinsics = model.scene;
  r.gaze_px = project(model.scene, pose.to_camera(hit));
  for (const auto& m : model.markers_mm) {
    Vec2 px = project(model.scene, pose.to_camera(Vec3(m.x, m.y, 0.0)));
    if (model.corner_noise_px > 0.0) px += model.corner_noise_px * Vec2(rng.normal(), rng.normal());
    r.markers.push_back({px, Vec2(m.x, m.y)});
  }
  return r;
}

double sigma_for_mean_error(double mean_deg) { return mean_deg * 2.0 / std::sqrt(3.14159265358979323846); }

SyntheticCondition synthesize_condition(const BoardLayout& board, Mode mode, std::size_t n_samples,
                                        std::size_t n_participants, double sigma_deg, std::uint64_t seed,
                                        const EyeTrackerModel& model) {
  if (n_participants == 0) throw Error(ErrorCode::ValidationError, "need at least one participant");
  Rng rng(seed);
  const Calibration calib = default_calibration();
  const CameraPose& cam = calib.at(Side::A).pose;
  const std::string m(to_string(mode));

  std::vector<Vec3> eyes;
  for (std::size_t p = 0; p < n_participants; ++p) {
    eyes.emplace_back(rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0), 600.0 + rng.uniform(-30.0, 30.0));
  }

  SyntheticCondition out;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t p = i % n_participants;
    GazeSample s;
    s.sample_id = numbered((m + "-").c_str(), i, 5);
    s.session_id = numbered((m + "-session-").c_str(), p);
    s.participant_id = numbered((m + "-p").c_str(), p);
    s.mode = m;
    Vec3 target;
    if (mode == Mode::gamified) {
      const auto& cell = board.cells()[rng.uniform_index(board.cells().size())];
      s.letter_id = cell.id;
      target = cell.position_mm;
    } else {
      const Point2 xy{rng.uniform(-board.width_mm() / 2, board.width_mm() / 2),
                      rng.uniform(-board.height_mm() / 2, board.height_mm() / 2)};
      s.stimulus_xy_mm = xy;
      target = Vec3(xy.x, xy.y, 0.0);
    }
    const Vec3& eye = eyes[p];
    s.label_vec = gaze_label(cam, target, cam.to_camera(eye));
    std::tie(s.label_pitch_rad, s.label_yaw_rad) = vector_to_pitchyaw(s.label_vec);
    s.captured_at_ms = static_cast<std::int64_t>(i) * 1000;
    const Vec3 gaze = perturb_direction((target - eye).normalized(), sigma_deg, rng);
    out.records.push_back(synthesize_eval_record(s.sample_id, s.participant_id, eye, gaze, model, rng));
    out.samples.push_back(std::move(s));
  }
  return out;
}

BotPolicy random_policy(std::uint64_t seed) {
  Rng rng(seed);
  BotPolicy p;
  p.reject_rate = rng.uniform(0.0, 0.4);
  p.max_rejects = 1 + static_cast<int>(rng.uniform_index(3));
  p.correct_rate = rng.uniform(0.3, 1.0);
  p.timeout_rate = rng.uniform(0.0, 0.3);
  p.mark_rate = rng.uniform(0.2, 1.0);
  p.min_think_ms = static_cast<std::int64_t>(rng.uniform_index(500));
  p.max_think_ms = p.min_think_ms + static_cast<std::int64_t>(rng.uniform_index(5000));
  p.tick_ms = 100 + static_cast<std::int64_t>(rng.uniform_index(900));
  p.disconnect_rate = rng.bernoulli(0.3) ? rng.uniform(0.0, 0.05) : 0.0;
  p.stray_rate = rng.bernoulli(0.5) ? rng.uniform(0.0, 0.1) : 0.0;
  return p;
}

SimulatedGame play_session(SessionRuntime& runtime, Mode mode, const std::vector<PlayerSpec>& players,
                           const BotPolicy& policy, std::uint64_t seed, std::int64_t start_ms) {
  const std::size_t need = mode == Mode::gamified ? 2 : 1;
  if (players.size() != need) throw Error(ErrorCode::ConfigError, "wrong number of players for the mode");
  Bots bots(runtime, mode, players, policy, seed, start_ms);
  return bots.run();
}

std::optional<EvalRecord> eval_record_for_capture(const SessionRuntime& runtime, const std::string& capture_id,
                                                  const Calibration& calibration, const EyeTrackerModel& model, Rng& rng) {
  const CaptureOutcome* c = runtime.capture_outcome(capture_id);
  if (c == nullptr || !c->sample || !c->truth) return std::nullopt;
  const CameraPose& pose = calibration.at(c->sample->camera_side).pose;
  const Mat3 rt = pose.rotation().transpose();
  const Vec3 eye = rt * (c->truth->face_center_camera_mm - pose.translation_mm());
  const Vec3 gaze = rt * c->truth->gaze_camera;
  return synthesize_eval_record(capture_id, c->sample->participant_id, eye, gaze, model, rng);
}

BatchResult simulate_batch(const AppConfig& config, const BatchOptions& options) {
  AppConfig cfg = config;
  cfg.drivers.kind = "synthetic";
  cfg.drivers.synthetic.fixation_error_deg = options.gaze_sigma_deg;
  cfg.drivers.synthetic.estimator_noise_deg = options.estimator_noise_deg;
  cfg.server.seed = options.seed;
  const AppContext app = build_app_context(cfg);

  fs::path root = options.store_root;
  const bool temporary = root.empty();
  if (temporary) root = fs::temp_directory_path() / ("gazequiz-batch-" + std::to_string(derive_seed(options.seed, "tmp")));
  if (temporary) fs::remove_all(root);
  SessionStore store = SessionStore::create(root, *app.board, cfg.normalization);

  BatchResult result;
  Rng rng(derive_seed(options.seed, "eyetracker"));
  const EyeTrackerModel model;
  const std::vector<PlayerSpec> players(options.mode == Mode::gamified ? 2 : 1);
  for (std::size_t i = 0; i < options.sessions; ++i) {
    RuntimeContext rc;
    rc.engine = app.engine;
    rc.capture = app.capture;
    rc.store = &store;
    rc.seed = derive_seed(options.seed, "session", i);
    rc.record_trace = false;
    SessionRuntime rt(numbered(options.mode == Mode::gamified ? "pair-" : "solo-", i), rc);
    SimulatedGame game = play_session(rt, options.mode, players, options.policy, derive_seed(options.seed, "bots", i));

    std::set<std::string> approved(game.approved_captures.begin(), game.approved_captures.end());
    std::map<std::string, int> word_of;
    int word = -1;
    for (const auto& e : game.log) {
      if (e.kind == EventKind::word_assigned) {
        word = e.payload.at("word_index").get<int>();
        ++result.words;
      }
      if (e.kind == EventKind::capture_approved) word_of[e.payload.at("capture_id").get<std::string>()] = word;
    }
    for (const auto& id : game.approved_captures) {
      if (auto rec = eval_record_for_capture(rt, id, app.calibration, model, rng)) result.records.push_back(*rec);
    }
    for (const auto& s : store.samples()) {
      if (s.session_id != rt.session_id()) continue;
      if (!approved.count(s.sample_id)) {
        ++result.samples_without_approval;
        continue;
      }
      if (options.mode == Mode::gamified) ++result.samples_per_word[s.session_id + "/" + std::to_string(word_of[s.sample_id])];
    }
    result.games.push_back(std::move(game));
  }
  result.samples = store.samples();
  if (temporary) {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  return result;
}

PopulationResult simulate_population(const AppConfig& config, SessionStore& store, const PopulationOptions& options) {
  if (options.eyetracker_wearers > options.participants) {
    throw Error(ErrorCode::ConfigError, "more eye-tracker wearers than participants");
  }
  AppConfig cfg = config;
  cfg.server.seed = options.seed;
  const AppContext app = build_app_context(cfg);
  Rng rng(derive_seed(options.seed, "population"));

  std::vector<PlayerSpec> people(options.participants);
  for (std::size_t i = 0; i < options.eyetracker_wearers; ++i) people[i].wearing_eyetracker = true;
  rng.shuffle(people.begin(), people.end());
  if (people.size() % 2 == 1) people.push_back({false, true});

  auto remaining_failures = std::make_shared<std::size_t>(options.lost_samples);
  PopulationResult result;
  BotPolicy policy;
  policy.reject_rate = 0.1;
  for (std::size_t pair = 0; pair * 2 < people.size(); ++pair) {
    RuntimeContext rc;
    rc.engine = app.engine;
    rc.capture = app.capture;
    rc.store = &store;
    rc.seed = derive_seed(options.seed, "session", pair);
    rc.record_trace = false;
    rc.before_persist = [remaining_failures](const GazeSample& s) {
      if (s.wearing_eyetracker && *remaining_failures > 0) {
        --*remaining_failures;
        throw Error(ErrorCode::StorageError, "injected write failure");
      }
    };
    SessionRuntime rt(numbered("visit-", pair), rc);
    const std::vector<PlayerSpec> specs{people[2 * pair], people[2 * pair + 1]};
    const SimulatedGame game = play_session(rt, Mode::gamified, specs, policy, derive_seed(options.seed, "bots", pair));
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].exclude_from_dataset) result.staff.push_back(game.participant_ids[i]);
    }
    result.unsaved += game.unsaved;
    ++result.sessions;
  }
  for (const auto& p : store.participants()) {
    if (!p.exclude_from_dataset) result.participants.push_back(p);
  }
  return result;
}

}  // namespace gazequiz
