#include "gazequiz/session_host.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "gazequiz/error.hpp"
#include "gazequiz/log.hpp"
#include "gazequiz/rng.hpp"

namespace gazequiz {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool safe_id(const std::string& s) {
  if (s.empty() || s.size() > 128 || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
  });
}

nlohmann::json point_json(const Point2& p) { return nlohmann::json::array({p.x, p.y}); }

std::string_view trace_type_name(TraceEntry::Type t) {
  switch (t) {
    case TraceEntry::Type::message: return "message";
    case TraceEntry::Type::disconnect: return "disconnect";
    case TraceEntry::Type::tick: return "tick";
  }
  return "tick";
}

}  // namespace

DriverCaptureService::DriverCaptureService(std::shared_ptr<const BoardLayout> board, Calibration calibration,
                                           CaptureSettings settings)
    : board_(std::move(board)), calibration_(std::move(calibration)), settings_(std::move(settings)) {
  if (!board_) throw Error(ErrorCode::ConfigError, "capture service needs a board layout");
}

void DriverCaptureService::set_drivers(Side side, SideDrivers drivers) {
  if (!drivers.source || !drivers.detector) throw Error(ErrorCode::ConfigError, "frame source and face detector are required");
  drivers_[side] = std::move(drivers);
}

CaptureOutcome DriverCaptureService::capture(const CaptureContext& ctx, const CaptureTarget& target) {
  const auto it = drivers_.find(ctx.side);
  if (it == drivers_.end()) throw Error(ErrorCode::ConfigError, "no drivers for side " + std::string(to_string(ctx.side)));
  const auto cal = calibration_.find(ctx.side);
  if (cal == calibration_.end()) throw Error(ErrorCode::ConfigError, "no calibration for side " + std::string(to_string(ctx.side)));
  const CaptureDrivers d{it->second.source.get(), it->second.detector.get(), it->second.estimator.get()};
  return gazequiz::capture(ctx, target, *board_, cal->second, d, settings_);
}

std::unique_ptr<DriverCaptureService> make_synthetic_capture_service(std::shared_ptr<const BoardLayout> board,
                                                                     const Calibration& calibration,
                                                                     const CaptureSettings& settings,
                                                                     const SyntheticDriverConfig& config, std::uint64_t seed) {
  auto service = std::make_unique<DriverCaptureService>(std::move(board), calibration, settings);
  for (const auto& [side, cal] : calibration) {
    SyntheticScenario scenario = default_scenario(side, calibration, seed);
    scenario.blink_rate = config.blink_rate;
    scenario.absent_rate = config.absent_rate;
    scenario.head_jitter_mm = config.head_jitter_mm;
    scenario.fixation_error_deg = config.fixation_error_deg;
    DriverCaptureService::SideDrivers d;
    d.source = std::make_unique<SyntheticFrameSource>(scenario);
    d.detector = std::make_unique<SyntheticFaceDetector>(cal.intrinsics);
    d.estimator = std::make_unique<SyntheticGazeEstimator>(config.estimator_noise_deg, config.estimator_outlier_rate,
                                                           derive_seed(seed, "estimator", static_cast<std::uint64_t>(side)));
    service->set_drivers(side, std::move(d));
  }
  return service;
}

nlohmann::ordered_json trace_entry_to_json(const TraceEntry& e) {
  nlohmann::ordered_json j;
  j["type"] = trace_type_name(e.type);
  j["at_ms"] = e.at_ms;
  if (e.type != TraceEntry::Type::tick) j["text"] = e.text;
  return j;
}

TraceEntry trace_entry_from_json(const nlohmann::json& j) {
  TraceEntry e;
  const std::string type = j.at("type").get<std::string>();
  if (type == "message") {
    e.type = TraceEntry::Type::message;
  } else if (type == "disconnect") {
    e.type = TraceEntry::Type::disconnect;
  } else if (type == "tick") {
    e.type = TraceEntry::Type::tick;
  } else {
    throw Error(ErrorCode::ValidationError, "unknown trace entry type '" + type + "'");
  }
  e.at_ms = j.at("at_ms").get<std::int64_t>();
  e.text = j.value("text", "");
  return e;
}

void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace) {
  for (const auto& e : trace) out << trace_entry_to_json(e).dump() << '\n';
}

std::vector<TraceEntry> read_trace(std::istream& in) {
  std::vector<TraceEntry> trace;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      trace.push_back(trace_entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const Error& e) {
      throw ParseError(n, e.what());
    }
  }
  return trace;
}

SessionRuntime::SessionRuntime(std::string session_id, RuntimeContext ctx)
    : session_id_(std::move(session_id)), ctx_(std::move(ctx)) {
  if (!ctx_.engine) throw Error(ErrorCode::ConfigError, "session runtime needs an engine");
  if (!ctx_.capture) throw Error(ErrorCode::ConfigError, "session runtime needs a capture service");
}

std::vector<SessionEvent> SessionRuntime::event_log() const { return game_ ? game_->log : std::vector<SessionEvent>{}; }

std::optional<std::string> SessionRuntime::participant_for_token(const std::string& token) const {
  if (const Player* p = find_token(token)) return p->participant_id;
  return std::nullopt;
}

const CaptureOutcome* SessionRuntime::capture_outcome(const std::string& capture_id) const {
  const auto it = captures_.find(capture_id);
  return it == captures_.end() ? nullptr : &it->second;
}

std::int64_t SessionRuntime::game_ms(std::int64_t now_ms) const {
  if (paused_ || !game_) return clock_base_ms_;
  return clock_base_ms_ + std::max<std::int64_t>(0, now_ms - clock_anchor_ms_);
}

std::vector<Outbound> SessionRuntime::handle_text(std::string_view text, std::int64_t now_ms) {
  if (ctx_.record_trace) trace_.push_back({TraceEntry::Type::message, now_ms, std::string(text)});
  Out out;
  ClientMessage m;
  try {
    m = parse_client_message(text);
  } catch (const Error& e) {
    std::string token;
    try {
      const auto j = nlohmann::json::parse(text);
      if (j.is_object() && j.contains("token") && j["token"].is_string()) token = j["token"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
    send_error(find_token(token) ? token : std::string(), "invalid_message", e.what(), out);
    return out;
  }
  handle_parsed(m, now_ms, out);
  return out;
}

std::vector<Outbound> SessionRuntime::handle(const ClientMessage& message, std::int64_t now_ms) {
  if (ctx_.record_trace) trace_.push_back({TraceEntry::Type::message, now_ms, format_client_message(message)});
  Out out;
  handle_parsed(message, now_ms, out);
  return out;
}

void SessionRuntime::handle_parsed(const ClientMessage& m, std::int64_t now, Out& out) {
  const std::string reply_to = find_token(m.token) ? m.token : std::string();
  if (m.session_id != session_id_) {
    send_error(reply_to, "wrong_session", "message is for session '" + m.session_id + "'", out);
    return;
  }
  if (closed_) {
    send_error(reply_to, "session_finished", "session has ended", out);
    return;
  }
  if (m.kind == ClientKind::join) {
    on_join(m, now, out);
    return;
  }
  Player* p = find_token(m.token);
  if (p == nullptr) {
    send_error("", "unknown_token", "token is not part of this session", out);
    return;
  }
  on_action(*p, m, now, out);
  update_timer(now, out);
  broadcast_snapshots(now, out);
}

void SessionRuntime::on_join(const ClientMessage& m, std::int64_t now, Out& out) {
  if (!m.token.empty()) {
    Player* p = find_token(m.token);
    if (p == nullptr) {
      send_error("", "unknown_token", "token is not part of this session", out);
      return;
    }
    p->connected = true;
    const bool all_back = std::all_of(players_.begin(), players_.end(), [](const Player& q) { return q.connected; });
    if (paused_ && all_back) {
      paused_ = false;
      clock_anchor_ms_ = now;
      log::info("session_resumed", {{"session_id", session_id_}, {"game_ms", clock_base_ms_}});
    }
    send_role_views(*p, out);
    dirty_ = true;
    broadcast_snapshots(now, out);
    return;
  }

  Mode mode = Mode::gamified;
  try {
    if (m.payload.contains("mode")) mode = mode_from_string(m.payload["mode"].get<std::string>());
  } catch (const Error& e) {
    send_error("", "invalid_message", e.what(), out);
    return;
  }
  if (mode_fixed_ && mode != mode_) {
    send_error("", "mode_mismatch", "session is " + std::string(to_string(mode_)), out);
    return;
  }
  const std::size_t cap = mode_fixed_ ? capacity() : (mode == Mode::gamified ? 2 : 1);
  if (players_.size() >= cap || game_) {
    send_error("", "session_full", "session already has its players", out);
    return;
  }

  Player p;
  const std::uint64_t n = issued_++;
  p.token = "t-" + hex64(derive_seed(ctx_.seed, "token", n));
  p.participant_id = "p-" + hex64(derive_seed(ctx_.seed, "participant", n)).substr(0, 12);
  p.side = players_.empty() ? Side::A : Side::B;
  p.wearing_eyetracker = m.payload.value("wearing_eyetracker", false);
  p.exclude_from_dataset = m.payload.value("exclude_from_dataset", false);
  if (ctx_.store != nullptr) {
    try {
      ctx_.store->add_participant({p.participant_id, p.wearing_eyetracker, p.exclude_from_dataset});
    } catch (const Error& e) {
      send_error("", "storage_error", e.what(), out);
      return;
    }
  }
  mode_ = mode;
  mode_fixed_ = true;
  players_.push_back(p);
  log::info("player_joined", {{"session_id", session_id_}, {"participant_id", p.participant_id}, {"side", to_string(p.side)}});
  dirty_ = true;
  broadcast_snapshots(now, out);
}

void SessionRuntime::on_action(Player& p, const ClientMessage& m, std::int64_t now, Out& out) {
  if (m.kind == ClientKind::start) {
    if (game_) {
      send_error(p.token, "already_started", "game has already started", out);
      return;
    }
    p.started = true;
    dirty_ = true;
    const bool all_started = std::all_of(players_.begin(), players_.end(), [](const Player& q) { return q.started; });
    if (players_.size() == capacity() && all_started) start_game(now, out);
    return;
  }
  if (!game_) {
    send_error(p.token, "not_started", "game has not started", out);
    return;
  }
  if (paused_) {
    send_error(p.token, "paused", "waiting for a player to reconnect", out);
    return;
  }
  Input in;
  in.t_ms = game_ms(now);
  in.actor = p.participant_id;
  switch (m.kind) {
    case ClientKind::ready: in.action = action::Ready{}; break;
    case ClientKind::trigger_capture: in.action = action::TriggerCapture{}; break;
    case ClientKind::approve_capture: in.action = action::Approve{}; break;
    case ClientKind::reject_capture: in.action = action::Reject{}; break;
    case ClientKind::mark: {
      const auto& xy = m.payload.at("board_xy_mm");
      in.action = action::Mark{Point2{xy.at(0).get<double>(), xy.at(1).get<double>()}};
      break;
    }
    case ClientKind::answer: in.action = action::Answer{m.payload.at("answer").get<std::string>()}; break;
    case ClientKind::proceed: in.action = action::Proceed{}; break;
    case ClientKind::join:
    case ClientKind::start: return;
  }
  apply_input(in, now, out);
}

void SessionRuntime::start_game(std::int64_t now, Out& out) {
  std::vector<std::string> ids;
  for (const auto& q : players_) ids.push_back(q.participant_id);
  Step step;
  game_ = ctx_.engine->start_session(session_id_, ids, mode_, derive_seed(ctx_.seed, "game"), 0, &step);
  clock_base_ms_ = 0;
  clock_anchor_ms_ = now;
  if (ctx_.store != nullptr) {
    try {
      ctx_.store->open_session({session_id_, std::string(to_string(mode_)), ids, "open"});
    } catch (const Error& e) {
      log::error("store_disabled", {{"session_id", session_id_}, {"reason", e.what()}});
      ctx_.store = nullptr;
    }
  }
  log::info("game_started", {{"session_id", session_id_}, {"mode", to_string(mode_)}});
  sync_events();
  dirty_ = true;
  run_effects(step, now, out);
}

void SessionRuntime::apply_input(const Input& in, std::int64_t now, Out& out) {
  Step step;
  try {
    step = ctx_.engine->apply(*game_, in);
  } catch (const ProtocolViolation& e) {
    const std::string token = token_of(in.actor);
    if (!token.empty()) send_error(token, "protocol_violation", e.what(), out);
    return;
  }
  sync_events();
  if (!step.events.empty()) dirty_ = true;
  run_effects(step, now, out);
}

void SessionRuntime::sync_events() {
  if (!game_) return;
  while (persisted_events_ < game_->log.size()) {
    if (ctx_.store != nullptr) {
      try {
        ctx_.store->append_event(session_id_, game_->log[persisted_events_]);
      } catch (const Error& e) {
        log::error("event_not_stored", {{"session_id", session_id_}, {"index", persisted_events_}, {"reason", e.what()}});
      }
    }
    ++persisted_events_;
  }
}

void SessionRuntime::run_effects(const Step& step, std::int64_t now, Out& out) {
  for (const Effect& effect : step.effects) {
    if (closed_) break;
    if (std::holds_alternative<effect::PromptWord>(effect)) {
      send(token_of(game_->questioner_id()), ServerKind::word_prompt, word_prompt_payload(), out);
      send(token_of(game_->answerer_id()), ServerKind::clue_view, clue_view_payload(), out);
    } else if (const auto* c = std::get_if<effect::StartCountdown>(&effect)) {
      nlohmann::json payload{{"seconds", c->seconds}, {"deadline_ms", c->deadline_ms}};
      if (game_->capture_target.stimulus_xy_mm) payload["stimulus_xy_mm"] = point_json(*game_->capture_target.stimulus_xy_mm);
      if (game_->word) payload["letter_index"] = game_->word->letter_cursor;
      send_all(ServerKind::countdown, payload, out);
    } else if (std::holds_alternative<effect::RequestCapture>(effect)) {
      run_capture(now, out);
    } else if (const auto* pi = std::get_if<effect::PresentImage>(&effect)) {
      send_all(ServerKind::captured_image, captured_image_payload(pi->capture_id), out);
    } else if (const auto* ps = std::get_if<effect::PersistSample>(&effect)) {
      persist(ps->capture_id, out);
    } else if (const auto* d = std::get_if<effect::DiscardCapture>(&effect)) {
      captures_.erase(d->capture_id);
    } else if (const auto* r = std::get_if<effect::RevealClue>(&effect)) {
      send_all(ServerKind::clue_revealed, {{"index", r->index}, {"glyph", r->glyph}}, out);
    } else if (const auto* res = std::get_if<effect::ShowResult>(&effect)) {
      send_all(ServerKind::result, {{"correct", res->correct}, {"word", res->word}, {"score", res->score}}, out);
    } else if (const auto* sw = std::get_if<effect::SwitchRoles>(&effect)) {
      send_all(ServerKind::roles_switched, {{"questioner", sw->questioner}, {"answerer", sw->answerer}}, out);
    } else if (const auto* end = std::get_if<effect::EndSession>(&effect)) {
      send_all(ServerKind::session_finished, {{"reason", end->reason}, {"score", end->score}}, out);
      close(end->reason);
    }
  }
}

void SessionRuntime::run_capture(std::int64_t now, Out& out) {
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "-c%04d", ++capture_counter_);
  const std::string capture_id = session_id_ + suffix;
  const std::string subject_id = game_->mode == Mode::gamified ? game_->questioner_id() : game_->players.front();
  const Player* subject = find_participant(subject_id);

  CaptureContext cc;
  cc.capture_id = capture_id;
  cc.session_id = session_id_;
  cc.participant_id = subject_id;
  cc.mode = game_->mode;
  cc.side = game_->mode == Mode::gamified ? game_->questioner_side() : Side::A;
  cc.t_ms = game_ms(now);
  cc.wearing_eyetracker = subject != nullptr && subject->wearing_eyetracker;

  CaptureOutcome outcome;
  try {
    outcome = ctx_.capture->capture(cc, game_->capture_target);
  } catch (const std::exception& e) {
    outcome = CaptureOutcome{};
    outcome.no_face = true;
    log::warn("capture_failed", {{"session_id", session_id_}, {"capture_id", capture_id}, {"reason", e.what()}});
    send_error(subject != nullptr ? subject->token : std::string(), "capture_failed", e.what(), out);
  }
  const bool no_face = outcome.no_face;
  captures_[capture_id] = std::move(outcome);
  send(subject != nullptr ? subject->token : std::string(), ServerKind::captured_image, captured_image_payload(capture_id), out);
  apply_input(Input{cc.t_ms, std::string(kCaptureActor), action::CaptureResult{capture_id, no_face}}, now, out);
}

void SessionRuntime::persist(const std::string& capture_id, Out& out) {
  const auto it = captures_.find(capture_id);
  const Player* subject = nullptr;
  try {
    if (it == captures_.end() || !it->second.sample) throw Error(ErrorCode::NotFound, "capture " + capture_id + " is not held");
    GazeSample sample = *it->second.sample;
    subject = find_participant(sample.participant_id);
    if (ctx_.before_persist) ctx_.before_persist(sample);
    if (ctx_.store != nullptr) {
      sample.image_ref = ctx_.store->write_image(session_id_, capture_id, it->second.image);
      sample.normalized_image_ref = ctx_.store->write_image(session_id_, capture_id + "_norm", it->second.normalized_image);
      ctx_.store->append_sample(sample);
    }
    it->second.sample = sample;
  } catch (const std::exception& e) {
    ++unsaved_;
    log::error("capture_unsaved", {{"session_id", session_id_}, {"capture_id", capture_id}, {"reason", e.what()}});
    if (subject != nullptr) send_error(subject->token, "capture_unsaved", e.what(), out);
  }
}

void SessionRuntime::abandon(std::int64_t now, Out& out) {
  if (running()) {
    apply_input(Input{game_ms(now), std::string(kServerActor), action::Abandon{}}, now, out);
  }
  if (!closed_) {
    send_all(ServerKind::session_finished, {{"reason", "abandoned"}, {"score", game_ ? game_->score : 0}}, out);
    close("abandoned");
  }
}

void SessionRuntime::close(const std::string& status) {
  if (closed_) return;
  closed_ = true;
  if (ctx_.store != nullptr && game_) {
    try {
      ctx_.store->set_session_status(session_id_, status);
    } catch (const Error& e) {
      log::error("status_not_stored", {{"session_id", session_id_}, {"reason", e.what()}});
    }
    if (ctx_.record_trace) {
      std::ofstream out(ctx_.store->root() / "sessions" / session_id_ / "trace.jsonl", std::ios::binary | std::ios::trunc);
      write_trace(out, trace_);
      if (!out) log::error("trace_not_stored", {{"session_id", session_id_}});
    }
  }
  log::info("session_closed", {{"session_id", session_id_}, {"status", status}, {"unsaved", unsaved_}});
}

std::vector<Outbound> SessionRuntime::disconnect(const std::string& token, std::int64_t now_ms) {
  if (ctx_.record_trace) trace_.push_back({TraceEntry::Type::disconnect, now_ms, token});
  Out out;
  Player* p = find_token(token);
  if (p == nullptr || closed_ || !p->connected) return out;
  p->connected = false;
  if (!paused_) {
    clock_base_ms_ = game_ms(now_ms);
    paused_ = true;
    paused_since_ms_ = now_ms;
    log::info("session_paused", {{"session_id", session_id_}, {"participant_id", p->participant_id}});
  }
  dirty_ = true;
  broadcast_snapshots(now_ms, out);
  return out;
}

std::vector<Outbound> SessionRuntime::tick(std::int64_t now_ms) {
  if (ctx_.record_trace) trace_.push_back({TraceEntry::Type::tick, now_ms, {}});
  Out out;
  if (closed_) return out;
  if (paused_) {
    if (now_ms - paused_since_ms_ >= ctx_.grace_ms) abandon(now_ms, out);
  } else if (running()) {
    const std::int64_t t = game_ms(now_ms);
    if (t >= game_->last_event_ms) apply_input(Input{t, std::string(kSystemActor), action::Tick{}}, now_ms, out);
    update_timer(now_ms, out);
  }
  if (dirty_) broadcast_snapshots(now_ms, out);
  return out;
}

void SessionRuntime::update_timer(std::int64_t now, Out& out) {
  if (!game_ || closed_ || game_->phase != Phase::answering || !game_->word) {
    last_timer_second_ = -1;
    return;
  }
  const std::int64_t elapsed = game_ms(now) - game_->word->answering_started_ms;
  const std::int64_t remaining = std::max<std::int64_t>(0, ctx_.engine->config().answer_limit_ms() - elapsed);
  const std::int64_t second = (remaining + 999) / 1000;
  if (second == last_timer_second_) return;
  last_timer_second_ = second;
  send_all(ServerKind::timer, {{"remaining_ms", remaining}, {"seconds", second}}, out);
}

void SessionRuntime::send(const std::string& recipient, ServerKind kind, nlohmann::json payload, Out& out) {
  ServerMessage m;
  m.kind = kind;
  m.session_id = session_id_;
  m.payload = std::move(payload);
  if (!recipient.empty()) {
    const Player* p = find_token(recipient);
    if (p == nullptr || !p->connected) return;
    m.seq = ++seq_[recipient];
  }
  out.push_back({recipient, std::move(m)});
}

void SessionRuntime::send_all(ServerKind kind, const nlohmann::json& payload, Out& out) {
  for (const auto& p : players_) send(p.token, kind, payload, out);
}

void SessionRuntime::send_error(const std::string& recipient, const std::string& code, const std::string& message,
                                Out& out) {
  send(recipient, ServerKind::error, {{"code", code}, {"message", message}}, out);
}

void SessionRuntime::broadcast_snapshots(std::int64_t now, Out& out) {
  for (const auto& p : players_) send(p.token, ServerKind::state_snapshot, snapshot_for(p, now), out);
  dirty_ = false;
}

std::string SessionRuntime::role_of(const Player& p) const {
  if (!game_) return "waiting";
  if (game_->mode == Mode::standard) return "participant";
  return p.participant_id == game_->questioner_id() ? "questioner" : "answerer";
}

nlohmann::json SessionRuntime::snapshot_for(const Player& p, std::int64_t now) const {
  nlohmann::json j;
  j["mode"] = to_string(mode_);
  j["phase"] = game_ ? to_string(game_->phase) : std::string_view("lobby");
  j["paused"] = paused_;
  j["game_ms"] = game_ms(now);
  j["you"] = {{"participant_id", p.participant_id}, {"token", p.token}, {"side", to_string(p.side)}, {"role", role_of(p)}};
  nlohmann::json players = nlohmann::json::array();
  for (const auto& q : players_) {
    players.push_back({{"participant_id", q.participant_id},
                       {"side", to_string(q.side)},
                       {"role", role_of(q)},
                       {"connected", q.connected},
                       {"started", q.started}});
  }
  j["players"] = std::move(players);
  if (!game_) return j;

  j["score"] = game_->score;
  j["word_index"] = game_->word_index;
  if (game_->phase == Phase::countdown) j["countdown_deadline_ms"] = game_->countdown_deadline_ms;
  if (game_->mode == Mode::standard) {
    j["stimuli_shown"] = game_->stimuli_shown;
    j["captures_completed"] = game_->captures_completed;
    if (game_->capture_target.stimulus_xy_mm) j["stimulus_xy_mm"] = point_json(*game_->capture_target.stimulus_xy_mm);
  }
  if (!game_->finish_reason.empty()) j["finish_reason"] = game_->finish_reason;
  if (game_->word) {
    const ActiveWord& w = *game_->word;
    const bool full = role_of(p) == "questioner" || game_->phase == Phase::reveal || game_->phase == Phase::finished;
    nlohmann::json word;
    word["hidden_positions"] = w.hidden_positions;
    word["letter_cursor"] = w.letter_cursor;
    if (full) {
      word["glyphs"] = w.question.entry.glyphs;
      word["letter_ids"] = w.letter_ids;
    } else {
      word["visible"] = clue_view_payload()["visible"];
    }
    nlohmann::json marks = nlohmann::json::array();
    for (const auto& m : w.marks) marks.push_back(m ? point_json(*m) : nlohmann::json(nullptr));
    word["marks"] = std::move(marks);
    if (w.clue_revealed) {
      const std::size_t idx = w.question.first_letter_clue_index;
      word["clue"] = {{"index", idx}, {"glyph", w.question.entry.glyphs.at(idx)}};
    }
    if (game_->phase == Phase::answering) {
      word["answer_deadline_ms"] = w.answering_started_ms + ctx_.engine->config().answer_limit_ms();
    }
    if (w.correct) word["correct"] = *w.correct;
    j["word"] = std::move(word);
  }
  return j;
}

nlohmann::json SessionRuntime::word_prompt_payload() const {
  const ActiveWord& w = *game_->word;
  return {{"word_index", game_->word_index},
          {"word", w.word()},
          {"glyphs", w.question.entry.glyphs},
          {"hidden_positions", w.hidden_positions},
          {"letter_ids", w.letter_ids}};
}

nlohmann::json SessionRuntime::clue_view_payload() const {
  const ActiveWord& w = *game_->word;
  nlohmann::json visible = nlohmann::json::array();
  for (std::size_t i = 0; i < w.question.entry.glyphs.size(); ++i) {
    const bool hidden = std::find(w.hidden_positions.begin(), w.hidden_positions.end(), i) != w.hidden_positions.end();
    const bool clue = w.clue_revealed && i == w.question.first_letter_clue_index;
    visible.push_back(hidden && !clue ? nlohmann::json(nullptr) : nlohmann::json(w.question.entry.glyphs[i]));
  }
  return {{"word_index", game_->word_index},
          {"visible", std::move(visible)},
          {"hidden_positions", w.hidden_positions},
          {"letter_count", w.question.entry.glyphs.size()}};
}

nlohmann::json SessionRuntime::captured_image_payload(const std::string& capture_id) const {
  nlohmann::json j;
  j["capture_id"] = capture_id;
  const CaptureOutcome* c = capture_outcome(capture_id);
  j["no_face"] = c == nullptr || c->no_face;
  j["image_ref"] = "/captures/" + session_id_ + "/" + capture_id + ".pgm";
  if (c != nullptr && !c->no_face) {
    j["normalized_image_ref"] = "/captures/" + session_id_ + "/" + capture_id + "_norm.pgm";
    if (c->gaze_arrow_end) j["gaze_arrow"] = point_json(*c->gaze_arrow_end);
  }
  if (game_ && game_->word) {
    const auto& approved = game_->word->approved_captures;
    const auto pos = std::find(approved.begin(), approved.end(), capture_id);
    j["letter_index"] = pos != approved.end() ? static_cast<std::size_t>(pos - approved.begin()) : game_->word->letter_cursor;
  }
  if (game_ && game_->capture_target.stimulus_xy_mm) j["stimulus_xy_mm"] = point_json(*game_->capture_target.stimulus_xy_mm);
  return j;
}

void SessionRuntime::send_role_views(const Player& p, Out& out) {
  if (!game_ || !game_->word || game_->mode != Mode::gamified) return;
  const std::string role = role_of(p);
  if (role == "questioner") {
    send(p.token, ServerKind::word_prompt, word_prompt_payload(), out);
    if (game_->phase == Phase::await_approval) {
      send(p.token, ServerKind::captured_image, captured_image_payload(game_->pending_capture_id), out);
    }
  } else {
    send(p.token, ServerKind::clue_view, clue_view_payload(), out);
    if (game_->phase == Phase::answerer_marking && !game_->word->approved_captures.empty()) {
      send(p.token, ServerKind::captured_image, captured_image_payload(game_->word->approved_captures.back()), out);
    }
  }
}

SessionRuntime::Player* SessionRuntime::find_token(const std::string& token) {
  if (token.empty()) return nullptr;
  for (auto& p : players_) {
    if (p.token == token) return &p;
  }
  return nullptr;
}

const SessionRuntime::Player* SessionRuntime::find_token(const std::string& token) const {
  return const_cast<SessionRuntime*>(this)->find_token(token);
}

const SessionRuntime::Player* SessionRuntime::find_participant(const std::string& participant_id) const {
  for (const auto& p : players_) {
    if (p.participant_id == participant_id) return &p;
  }
  return nullptr;
}

std::string SessionRuntime::token_of(const std::string& participant_id) const {
  const Player* p = find_participant(participant_id);
  return p != nullptr ? p->token : std::string();
}

std::unique_ptr<SessionRuntime> replay_trace(const std::string& session_id, const RuntimeContext& ctx,
                                             const std::vector<TraceEntry>& trace, std::vector<Outbound>* messages) {
  auto runtime = std::make_unique<SessionRuntime>(session_id, ctx);
  for (const auto& e : trace) {
    std::vector<Outbound> out;
    switch (e.type) {
      case TraceEntry::Type::message: out = runtime->handle_text(e.text, e.at_ms); break;
      case TraceEntry::Type::disconnect: out = runtime->disconnect(e.text, e.at_ms); break;
      case TraceEntry::Type::tick: out = runtime->tick(e.at_ms); break;
    }
    if (messages != nullptr) messages->insert(messages->end(), out.begin(), out.end());
  }
  return runtime;
}

SessionHost::SessionHost(RuntimeContext base) : base_(std::move(base)) {}

std::shared_ptr<SessionRuntime> SessionHost::get_or_create(const std::string& session_id) {
  if (!safe_id(session_id)) throw Error(ErrorCode::ValidationError, "session id '" + session_id + "' is not allowed");
  std::lock_guard lock(mu_);
  auto& slot = sessions_[session_id];
  if (!slot) {
    RuntimeContext ctx = base_;
    ctx.seed = derive_seed(base_.seed, session_id);
    slot = std::make_shared<SessionRuntime>(session_id, std::move(ctx));
  }
  return slot;
}

std::shared_ptr<SessionRuntime> SessionHost::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionHost::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

std::size_t SessionHost::reap_finished() {
  std::lock_guard lock(mu_);
  return std::erase_if(sessions_, [](const auto& kv) { return kv.second->finished(); });
}

}  // namespace gazequiz
