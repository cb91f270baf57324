#include "gazequiz/engine.hpp"

#include <algorithm>
#include <cmath>

#include "gazequiz/error.hpp"
#include "gazequiz/rng.hpp"
#include "gazequiz/unicode.hpp"

namespace gazequiz {

std::string_view to_string(Mode m) { return m == Mode::gamified ? "gamified" : "standard"; }

Mode mode_from_string(std::string_view s) {
  if (s == "gamified") return Mode::gamified;
  if (s == "standard") return Mode::standard;
  throw Error(ErrorCode::ConfigError, "unknown session mode '" + std::string(s) + "'");
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::idle: return "idle";
    case Phase::briefing: return "briefing";
    case Phase::answerer_review: return "answerer_review";
    case Phase::await_capture_trigger: return "await_capture_trigger";
    case Phase::countdown: return "countdown";
    case Phase::capturing: return "capturing";
    case Phase::await_approval: return "await_approval";
    case Phase::answerer_marking: return "answerer_marking";
    case Phase::answering: return "answering";
    case Phase::reveal: return "reveal";
    case Phase::await_trigger: return "await_trigger";
    case Phase::finished: return "finished";
  }
  return "unknown";
}

std::string_view action_name(const Action& a) {
  struct Visitor {
    std::string_view operator()(const action::Ready&) const { return "ready"; }
    std::string_view operator()(const action::TriggerCapture&) const { return "trigger_capture"; }
    std::string_view operator()(const action::CaptureResult&) const { return "capture_result"; }
    std::string_view operator()(const action::Approve&) const { return "approve_capture"; }
    std::string_view operator()(const action::Reject&) const { return "reject_capture"; }
    std::string_view operator()(const action::Mark&) const { return "mark"; }
    std::string_view operator()(const action::Answer&) const { return "answer"; }
    std::string_view operator()(const action::Proceed&) const { return "proceed"; }
    std::string_view operator()(const action::Tick&) const { return "tick"; }
    std::string_view operator()(const action::Abandon&) const { return "abandon"; }
  };
  return std::visit(Visitor{}, a);
}

namespace {

nlohmann::json point_json(const Point2& p) { return nlohmann::json::array({p.x, p.y}); }

Point2 point_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

nlohmann::json target_json(const CaptureTarget& t) {
  nlohmann::json j = nlohmann::json::object();
  if (t.letter_id) j["letter_id"] = *t.letter_id;
  if (t.stimulus_xy_mm) j["stimulus_xy_mm"] = point_json(*t.stimulus_xy_mm);
  return j;
}

[[noreturn]] void violation(const GameSession& s, const Input& in, const std::string& why) {
  throw ProtocolViolation(in.actor, std::string(to_string(s.phase)), std::string(action_name(in.action)), why);
}

bool is_player(const GameSession& s, const std::string& actor) {
  return std::find(s.players.begin(), s.players.end(), actor) != s.players.end();
}

}  // namespace

Engine::Engine(GameConfig config, std::shared_ptr<const std::vector<DictionaryEntry>> dictionary,
               std::shared_ptr<const BoardLayout> board)
    : config_(config), dictionary_(std::move(dictionary)), board_(std::move(board)) {
  config_.validate();
  if (!dictionary_ || !board_) throw Error(ErrorCode::ConfigError, "engine needs a dictionary and a board layout");
}

void Engine::emit(GameSession& s, Step& step, std::int64_t t, std::string_view actor, EventKind kind,
                  nlohmann::json payload) const {
  validate_payload(kind, payload);
  SessionEvent e{t, std::string(actor), kind, std::move(payload)};
  s.last_event_ms = t;
  s.log.push_back(e);
  step.events.push_back(std::move(e));
}

Point2 Engine::stimulus_position(std::uint64_t seed, int index) const {
  Rng rng(derive_seed(seed, "stimulus", static_cast<std::uint64_t>(index)));
  const double half_w = board_->width_mm() / 2.0;
  const double half_h = board_->height_mm() / 2.0;
  const double x = rng.uniform(-half_w, half_w);
  const double y = rng.uniform(-half_h, half_h);
  return {x, y};
}

void Engine::assign_word(GameSession& s, std::int64_t t, Step& step) const {
  const auto seed = derive_seed(s.seed, "word", static_cast<std::uint64_t>(s.word_index));
  QuestionWord q = select_question(*dictionary_, config_, *board_, seed, s.used_entries);
  if (s.used_entries.count(q.entry_index) != 0) s.used_entries.clear();  // every eligible word used once
  s.used_entries.insert(q.entry_index);

  ActiveWord w;
  w.hidden_positions = q.hidden_positions();
  for (const auto pos : w.hidden_positions) w.letter_ids.push_back(board_->find_glyph(q.entry.glyphs[pos])->id);
  w.marks.assign(w.hidden_positions.size(), std::nullopt);
  w.question = std::move(q);

  nlohmann::json payload{{"word_index", s.word_index},
                         {"word", w.word()},
                         {"glyphs", w.question.entry.glyphs},
                         {"hidden", w.hidden_positions},
                         {"letter_ids", w.letter_ids},
                         {"questioner", s.questioner_id()},
                         {"answerer", s.answerer_id()}};
  s.word = std::move(w);
  emit(s, step, t, kSystemActor, EventKind::word_assigned, std::move(payload));
  step.effects.push_back(effect::PromptWord{s.word_index});
}

GameSession Engine::start_session(const std::string& session_id, const std::vector<std::string>& players, Mode mode,
                                  std::uint64_t seed, std::int64_t t_ms, Step* step_out) const {
  const std::size_t needed = mode == Mode::gamified ? 2 : 1;
  if (players.size() != needed) {
    throw Error(ErrorCode::ConfigError, std::string(to_string(mode)) + " session needs " + std::to_string(needed) +
                                            " player(s), got " + std::to_string(players.size()));
  }
  for (const auto& p : players) {
    if (p.empty() || p == kSystemActor || p == kCaptureActor || p == kServerActor) {
      throw Error(ErrorCode::ConfigError, "invalid player id '" + p + "'");
    }
  }
  if (mode == Mode::gamified && players[0] == players[1]) throw Error(ErrorCode::ConfigError, "players must be distinct");

  GameSession s;
  s.session_id = session_id;
  s.mode = mode;
  s.players = players;
  s.seed = seed;
  s.last_event_ms = t_ms;

  Step step;
  emit(s, step, t_ms, kSystemActor, EventKind::game_started,
       {{"session_id", session_id}, {"mode", to_string(mode)}, {"players", players}, {"seed", seed}});
  if (mode == Mode::gamified) {
    s.word_index = 0;
    s.questioner = 0;
    s.phase = Phase::briefing;
    assign_word(s, t_ms, step);
  } else {
    s.phase = Phase::await_trigger;
  }
  if (step_out != nullptr) *step_out = std::move(step);
  return s;
}

void Engine::advance_clock(GameSession& s, std::int64_t t, Step& step) const {
  if (s.phase == Phase::countdown && t >= s.countdown_deadline_ms) {
    s.phase = Phase::capturing;
    emit(s, step, t, kSystemActor, EventKind::capture_requested, {{"target", target_json(s.capture_target)}});
    step.effects.push_back(effect::RequestCapture{s.capture_target});
  }
  if (s.phase == Phase::answering) {
    ActiveWord& w = *s.word;
    const std::int64_t remaining = config_.answer_limit_ms() - (t - w.answering_started_ms);
    if (!w.clue_revealed && remaining <= config_.clue_remaining_ms()) {
      w.clue_revealed = true;
      const std::size_t idx = w.question.first_letter_clue_index;
      const std::string& glyph = w.question.entry.glyphs.at(idx);
      emit(s, step, t, kSystemActor, EventKind::clue_revealed, {{"index", idx}, {"glyph", glyph}});
      step.effects.push_back(effect::RevealClue{idx, glyph});
    }
    if (remaining <= 0) {
      w.correct = false;
      s.phase = Phase::reveal;
      emit(s, step, t, kSystemActor, EventKind::timeout, nlohmann::json::object());
      emit(s, step, t, kSystemActor, EventKind::result_shown, {{"correct", false}, {"word", w.word()}, {"score", s.score}});
      step.effects.push_back(effect::ShowResult{false, w.word(), s.score});
    }
  }
}

void Engine::dispatch(GameSession& s, const Input& in, Step& step) const {
  const std::int64_t t = in.t_ms;
  const bool from_questioner = s.mode == Mode::gamified && in.actor == s.questioner_id();
  const bool from_answerer = s.mode == Mode::gamified && in.actor == s.answerer_id();

  if (std::holds_alternative<action::Tick>(in.action)) return;

  if (std::holds_alternative<action::Abandon>(in.action)) {
    if (in.actor != kServerActor) violation(s, in, "only the server may abandon a session");
    if (s.phase == Phase::finished || s.phase == Phase::idle) violation(s, in, "session is not running");
    if (!s.pending_capture_id.empty()) step.effects.push_back(effect::DiscardCapture{s.pending_capture_id});
    s.pending_capture_id.clear();
    s.phase = Phase::finished;
    s.finish_reason = "abandoned";
    emit(s, step, t, kServerActor, EventKind::finished, {{"reason", "abandoned"}, {"score", s.score}});
    step.effects.push_back(effect::EndSession{"abandoned", s.score});
    return;
  }

  if (const auto* result = std::get_if<action::CaptureResult>(&in.action)) {
    if (in.actor != kCaptureActor) violation(s, in, "capture results come from the capture pipeline");
    if (s.phase != Phase::capturing) violation(s, in, "no capture is in flight");
    if (result->capture_id.empty()) violation(s, in, "empty capture id");
    emit(s, step, t, kCaptureActor, EventKind::capture_completed,
         {{"capture_id", result->capture_id}, {"no_face", result->no_face}});
    if (s.mode == Mode::gamified) {
      if (result->no_face) {
        s.phase = Phase::await_capture_trigger;  // retake the same letter
      } else {
        s.pending_capture_id = result->capture_id;
        s.phase = Phase::await_approval;
      }
      return;
    }
    if (result->no_face) {
      s.phase = Phase::await_trigger;
      return;
    }
    // Standard mode has no approval step; the capture is accepted as taken.
    emit(s, step, t, kSystemActor, EventKind::capture_approved, {{"capture_id", result->capture_id}});
    step.effects.push_back(effect::PersistSample{result->capture_id});
    ++s.captures_completed;
    if (s.captures_completed >= config_.standard_stimuli_count) {
      s.phase = Phase::finished;
      s.finish_reason = "completed";
      emit(s, step, t, kSystemActor, EventKind::finished, {{"reason", "completed"}, {"score", s.score}});
      step.effects.push_back(effect::EndSession{"completed", s.score});
    } else {
      s.phase = Phase::await_trigger;
    }
    return;
  }

  if (!is_player(s, in.actor)) violation(s, in, "unknown actor");

  if (s.mode == Mode::standard) {
    if (!std::holds_alternative<action::TriggerCapture>(in.action)) violation(s, in, "standard sessions only accept triggers");
    if (s.phase != Phase::await_trigger) violation(s, in, "not waiting for a trigger");
    const int index = s.stimuli_shown++;
    const Point2 pos = stimulus_position(s.seed, index);
    s.capture_target = CaptureTarget{std::nullopt, pos};
    s.countdown_deadline_ms = t + config_.countdown_ms();
    s.phase = Phase::countdown;
    emit(s, step, t, in.actor, EventKind::stimulus_shown, {{"index", index}, {"stimulus_xy_mm", point_json(pos)}});
    step.effects.push_back(effect::ShowStimulus{index, pos});
    step.effects.push_back(effect::StartCountdown{config_.capture_countdown_s, s.countdown_deadline_ms});
    return;
  }

  ActiveWord* w = s.word ? &*s.word : nullptr;
  struct Visitor {
    const Engine& engine;
    GameSession& s;
    const Input& in;
    Step& step;
    ActiveWord* w;
    bool from_questioner;
    bool from_answerer;
    std::int64_t t;

    void operator()(const action::Ready&) const {
      switch (s.phase) {
        case Phase::briefing:
          if (!s.ready_players.insert(in.actor).second) violation(s, in, "player already ready");
          engine.emit(s, step, t, in.actor, EventKind::ready, nlohmann::json::object());
          if (s.ready_players.size() == s.players.size()) s.phase = Phase::answerer_review;
          return;
        case Phase::answerer_review:
          if (!from_answerer) violation(s, in, "only the answerer confirms the clue letters");
          engine.emit(s, step, t, in.actor, EventKind::ready, nlohmann::json::object());
          s.phase = Phase::await_capture_trigger;
          return;
        case Phase::answerer_marking:
          if (!from_answerer) violation(s, in, "only the answerer moves to the next letter");
          engine.emit(s, step, t, in.actor, EventKind::ready, nlohmann::json::object());
          if (++w->letter_cursor < w->hidden_positions.size()) {
            s.phase = Phase::await_capture_trigger;
          } else {
            s.phase = Phase::answering;
            w->answering_started_ms = t;
          }
          return;
        default:
          violation(s, in, "ready is not expected now");
      }
    }

    void operator()(const action::TriggerCapture&) const {
      if (s.phase != Phase::await_capture_trigger) violation(s, in, "not waiting for a capture trigger");
      if (!from_questioner) violation(s, in, "only the questioner triggers the capture");
      const std::size_t k = w->letter_cursor;
      s.capture_target = CaptureTarget{w->letter_ids[k], std::nullopt};
      s.countdown_deadline_ms = t + engine.config_.countdown_ms();
      s.phase = Phase::countdown;
      engine.emit(s, step, t, in.actor, EventKind::capture_triggered, {{"letter_index", k}, {"letter_id", w->letter_ids[k]}});
      step.effects.push_back(effect::StartCountdown{engine.config_.capture_countdown_s, s.countdown_deadline_ms});
    }

    void operator()(const action::Approve&) const {
      if (s.phase != Phase::await_approval) violation(s, in, "no capture awaiting approval");
      if (!from_questioner) violation(s, in, "only the questioner approves captures");
      const std::string id = s.pending_capture_id;
      s.pending_capture_id.clear();
      w->approved_captures.push_back(id);
      s.phase = Phase::answerer_marking;
      engine.emit(s, step, t, in.actor, EventKind::capture_approved, {{"capture_id", id}});
      step.effects.push_back(effect::PersistSample{id});
      step.effects.push_back(effect::PresentImage{id});
    }

    void operator()(const action::Reject&) const {
      if (s.phase != Phase::await_approval) violation(s, in, "no capture awaiting approval");
      if (!from_questioner) violation(s, in, "only the questioner rejects captures");
      const std::string id = s.pending_capture_id;
      s.pending_capture_id.clear();
      s.phase = Phase::await_capture_trigger;
      engine.emit(s, step, t, in.actor, EventKind::capture_rejected, {{"capture_id", id}});
      step.effects.push_back(effect::DiscardCapture{id});
    }

    void operator()(const action::Mark& m) const {
      if (s.phase != Phase::answerer_marking) violation(s, in, "marks are only taken after an approved capture");
      if (!from_answerer) violation(s, in, "only the answerer marks the board");
      if (!std::isfinite(m.board_mm.x) || !std::isfinite(m.board_mm.y)) violation(s, in, "mark is not a finite point");
      const std::size_t k = w->letter_cursor;
      w->marks[k] = m.board_mm;
      engine.emit(s, step, t, in.actor, EventKind::mark_recorded, {{"letter_index", k}, {"board_xy_mm", point_json(m.board_mm)}});
      step.effects.push_back(effect::RecordMark{k, m.board_mm});
    }

    void operator()(const action::Answer& a) const {
      if (s.phase != Phase::answering) violation(s, in, "not accepting answers");
      if (!from_answerer) violation(s, in, "only the answerer answers");
      if (!unicode::is_valid_utf8(a.text)) violation(s, in, "answer is not valid UTF-8");
      const bool correct = unicode::nfc(a.text) == w->word();
      w->answer = a.text;
      w->correct = correct;
      if (correct) ++s.score;
      s.phase = Phase::reveal;
      engine.emit(s, step, t, in.actor, EventKind::answer_submitted, {{"answer", a.text}});
      step.effects.push_back(effect::EvaluateAnswer{a.text, correct});
      engine.emit(s, step, t, kSystemActor, EventKind::result_shown, {{"correct", correct}, {"word", w->word()}, {"score", s.score}});
      step.effects.push_back(effect::ShowResult{correct, w->word(), s.score});
    }

    void operator()(const action::Proceed&) const {
      if (s.phase != Phase::reveal) violation(s, in, "nothing to proceed from");
      if (!from_answerer) violation(s, in, "the answerer starts the next word");
      if (s.word_index + 1 >= engine.config_.words_per_game) {
        s.phase = Phase::finished;
        s.finish_reason = "completed";
        engine.emit(s, step, t, in.actor, EventKind::finished, {{"reason", "completed"}, {"score", s.score}});
        step.effects.push_back(effect::EndSession{"completed", s.score});
        return;
      }
      s.questioner = 1 - s.questioner;
      engine.emit(s, step, t, in.actor, EventKind::roles_switched, {{"questioner", s.questioner_id()}, {"answerer", s.answerer_id()}});
      step.effects.push_back(effect::SwitchRoles{s.questioner_id(), s.answerer_id()});
      ++s.word_index;
      s.phase = Phase::answerer_review;
      engine.assign_word(s, t, step);
    }

    void operator()(const action::CaptureResult&) const {}
    void operator()(const action::Tick&) const {}
    void operator()(const action::Abandon&) const {}
  };
  std::visit(Visitor{*this, s, in, step, w, from_questioner, from_answerer, t}, in.action);
}

Step Engine::apply(GameSession& session, const Input& input) const {
  if (session.phase == Phase::idle) {
    throw ProtocolViolation(input.actor, "idle", std::string(action_name(input.action)), "session not started");
  }
  if (input.t_ms < session.last_event_ms) {
    throw ProtocolViolation(input.actor, std::string(to_string(session.phase)), std::string(action_name(input.action)),
                            "timestamp precedes the last event");
  }

  // Work on a copy without the log, so a violation leaves `session` intact
  // and accepted inputs cost O(new events) rather than O(log).
  std::vector<SessionEvent> log = std::move(session.log);
  session.log.clear();
  GameSession work;
  try {
    work = session;
  } catch (...) {
    session.log = std::move(log);
    throw;
  }
  session.log = std::move(log);

  Step step;
  if (work.phase != Phase::finished) advance_clock(work, input.t_ms, step);
  if (work.phase == Phase::finished && !std::holds_alternative<action::Tick>(input.action) && step.events.empty()) {
    violation(work, input, "session is finished");
  }
  dispatch(work, input, step);
  if (work.phase != Phase::finished) advance_clock(work, input.t_ms, step);  // zero-length countdowns

  work.log = std::move(session.log);
  work.log.insert(work.log.end(), step.events.begin(), step.events.end());
  session = std::move(work);
  return step;
}

std::pair<GameSession, Step> Engine::handle_event(const GameSession& session, const Input& input) const {
  GameSession copy = session;
  Step step = apply(copy, input);
  return {std::move(copy), std::move(step)};
}

std::pair<GameSession, Step> Engine::standard_stimulus(const GameSession& session, std::int64_t t_ms,
                                                       const std::string& participant) const {
  if (session.mode != Mode::standard) {
    throw ProtocolViolation(participant, std::string(to_string(session.phase)), "trigger_capture", "not a standard session");
  }
  return handle_event(session, Input{t_ms, participant, action::TriggerCapture{}});
}

namespace {

/// The input that produced a logged event, or nullopt for events the
/// engine emits by itself (those are reproduced with a tick).
std::optional<Action> implied_action(const SessionEvent& e) {
  if (e.actor == kSystemActor) return std::nullopt;
  if (e.actor == kCaptureActor) {
    if (e.kind != EventKind::capture_completed) throw Error(ErrorCode::ReplayError, "capture actor on a non-capture event");
    return action::CaptureResult{e.payload.at("capture_id").get<std::string>(), e.payload.at("no_face").get<bool>()};
  }
  if (e.actor == kServerActor) {
    if (e.kind != EventKind::finished) throw Error(ErrorCode::ReplayError, "server actor on a non-finish event");
    return action::Abandon{};
  }
  switch (e.kind) {
    case EventKind::ready: return action::Ready{};
    case EventKind::capture_triggered:
    case EventKind::stimulus_shown: return action::TriggerCapture{};
    case EventKind::capture_approved: return action::Approve{};
    case EventKind::capture_rejected: return action::Reject{};
    case EventKind::mark_recorded: return action::Mark{point_from_json(e.payload.at("board_xy_mm"))};
    case EventKind::answer_submitted: return action::Answer{e.payload.at("answer").get<std::string>()};
    case EventKind::roles_switched:
    case EventKind::finished: return action::Proceed{};
    default: throw Error(ErrorCode::ReplayError, "event kind cannot originate from a player");
  }
}

}  // namespace

GameSession Engine::replay(const std::vector<SessionEvent>& log) const {
  if (log.empty()) return GameSession{};

  auto check = [&](std::size_t at, const std::vector<SessionEvent>& produced) {
    if (produced.empty()) throw ReplayError(at, "event was not reproduced");
    for (std::size_t k = 0; k < produced.size(); ++k) {
      if (at + k >= log.size()) throw ReplayError(log.size(), "log ends before the regenerated event " + to_line(produced[k]));
      if (to_line(produced[k]) != to_line(log[at + k])) {
        throw ReplayError(at + k, "expected " + to_line(produced[k]) + ", log has " + to_line(log[at + k]));
      }
    }
    return produced.size();
  };

  const SessionEvent& first = log.front();
  if (first.kind != EventKind::game_started) throw ReplayError(0, "log must begin with game_started");
  GameSession s;
  Step step;
  try {
    s = start_session(first.payload.at("session_id").get<std::string>(),
                      first.payload.at("players").get<std::vector<std::string>>(),
                      mode_from_string(first.payload.at("mode").get<std::string>()),
                      first.payload.at("seed").get<std::uint64_t>(), first.t_ms, &step);
  } catch (const ReplayError&) {
    throw;
  } catch (const std::exception& e) {
    throw ReplayError(0, e.what());
  }
  std::size_t i = check(0, step.events);

  while (i < log.size()) {
    const SessionEvent& e = log[i];
    Step produced;
    try {
      const auto action = implied_action(e);
      produced = apply(s, Input{e.t_ms, e.actor, action.value_or(action::Tick{})});
    } catch (const ReplayError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ReplayError(i, ex.what());
    }
    i += check(i, produced.events);
  }
  return s;
}

}  // namespace gazequiz
