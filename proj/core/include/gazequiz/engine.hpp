#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gazequiz/board.hpp"
#include "gazequiz/dictionary.hpp"
#include "gazequiz/events.hpp"
#include "gazequiz/game_config.hpp"
#include "gazequiz/types.hpp"

namespace gazequiz {

enum class Mode { gamified, standard };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

// Gamified: idle -> briefing -> answerer_review -> per hidden letter
// {await_capture_trigger -> countdown -> capturing -> await_approval ->
// answerer_marking} -> answering -> reveal -> (roles switch) answerer_review
// ... -> finished.
// Standard: idle -> await_trigger -> countdown -> capturing -> await_trigger
// ... -> finished.
enum class Phase {
  idle,
  briefing,
  answerer_review,
  await_capture_trigger,
  countdown,
  capturing,
  await_approval,
  answerer_marking,
  answering,
  reveal,
  await_trigger,
  finished,
};
std::string_view to_string(Phase p);

struct CaptureTarget {
  std::optional<std::string> letter_id;
  std::optional<Point2> stimulus_xy_mm;

  friend bool operator==(const CaptureTarget&, const CaptureTarget&) = default;
};

struct ActiveWord {
  QuestionWord question;
  std::vector<std::size_t> hidden_positions;
  std::vector<std::string> letter_ids;  // board cell per hidden position
  std::size_t letter_cursor = 0;
  std::vector<std::optional<Point2>> marks;
  std::vector<std::string> approved_captures;
  std::int64_t answering_started_ms = 0;
  bool clue_revealed = false;
  std::optional<std::string> answer;
  std::optional<bool> correct;

  std::string word() const { return question.entry.text(); }
  friend bool operator==(const ActiveWord&, const ActiveWord&) = default;
};

struct GameSession {
  std::string session_id;
  Mode mode = Mode::gamified;
  std::vector<std::string> players;  // players[0] sits on side A
  std::uint64_t seed = 0;

  Phase phase = Phase::idle;
  int word_index = -1;
  std::size_t questioner = 0;  // index into players
  int score = 0;
  std::int64_t last_event_ms = 0;

  std::set<std::string> ready_players;
  std::optional<ActiveWord> word;
  std::set<std::size_t> used_entries;

  std::int64_t countdown_deadline_ms = 0;
  CaptureTarget capture_target;
  std::string pending_capture_id;

  int stimuli_shown = 0;
  int captures_completed = 0;

  std::string finish_reason;
  std::vector<SessionEvent> log;

  const std::string& questioner_id() const { return players.at(questioner); }
  const std::string& answerer_id() const { return players.at(players.size() > 1 ? 1 - questioner : 0); }
  Side questioner_side() const { return questioner == 0 ? Side::A : Side::B; }

  friend bool operator==(const GameSession&, const GameSession&) = default;
};

namespace action {
struct Ready {};
struct TriggerCapture {};
struct CaptureResult {
  std::string capture_id;
  bool no_face = false;
};
struct Approve {};
struct Reject {};
struct Mark {
  Point2 board_mm;
};
struct Answer {
  std::string text;
};
struct Proceed {};
struct Tick {};
struct Abandon {};
}  // namespace action

using Action = std::variant<action::Ready, action::TriggerCapture, action::CaptureResult, action::Approve, action::Reject,
                            action::Mark, action::Answer, action::Proceed, action::Tick, action::Abandon>;
std::string_view action_name(const Action& a);

struct Input {
  std::int64_t t_ms = 0;
  std::string actor;
  Action action;
};

namespace effect {
struct PromptWord {
  int word_index;
};
struct StartCountdown {
  double seconds;
  std::int64_t deadline_ms;
};
struct RequestCapture {
  CaptureTarget target;
};
struct PresentImage {
  std::string capture_id;
};
struct PersistSample {
  std::string capture_id;
};
struct DiscardCapture {
  std::string capture_id;
};
struct RecordMark {
  std::size_t letter_index;
  Point2 board_mm;
};
struct EvaluateAnswer {
  std::string answer;
  bool correct;
};
struct RevealClue {
  std::size_t index;
  std::string glyph;
};
struct ShowResult {
  bool correct;
  std::string word;
  int score;
};
struct SwitchRoles {
  std::string questioner;
  std::string answerer;
};
struct ShowStimulus {
  int index;
  Point2 position_mm;
};
struct EndSession {
  std::string reason;
  int score;
};
}  // namespace effect

using Effect = std::variant<effect::PromptWord, effect::StartCountdown, effect::RequestCapture, effect::PresentImage,
                            effect::PersistSample, effect::DiscardCapture, effect::RecordMark, effect::EvaluateAnswer,
                            effect::RevealClue, effect::ShowResult, effect::SwitchRoles, effect::ShowStimulus,
                            effect::EndSession>;

/// Outcome of one accepted input: the commands for other modules, and the
/// events appended to the session log.
struct Step {
  std::vector<Effect> effects;
  std::vector<SessionEvent> events;
};

/// Deterministic session state machine. Holds only immutable context, so a
/// single Engine can serve any number of sessions concurrently; each
/// session must be driven by one owner at a time.
class Engine {
 public:
  Engine(GameConfig config, std::shared_ptr<const std::vector<DictionaryEntry>> dictionary,
         std::shared_ptr<const BoardLayout> board);

  const GameConfig& config() const { return config_; }
  const BoardLayout& board() const { return *board_; }

  /// Gamified sessions need two distinct players, standard sessions one.
  /// Throws ConfigError otherwise.
  GameSession start_session(const std::string& session_id, const std::vector<std::string>& players, Mode mode,
                            std::uint64_t seed, std::int64_t t_ms, Step* step = nullptr) const;

  /// Applies one input. Time-driven transitions up to input.t_ms happen
  /// first. Illegal inputs throw ProtocolViolation and leave `session`
  /// untouched.
  Step apply(GameSession& session, const Input& input) const;

  /// Pure form of apply.
  std::pair<GameSession, Step> handle_event(const GameSession& session, const Input& input) const;

  /// Standard-mode trigger (space key): shows the next stimulus and starts
  /// the countdown.
  std::pair<GameSession, Step> standard_stimulus(const GameSession& session, std::int64_t t_ms,
                                                 const std::string& participant) const;

  /// Rebuilds a session from its log by re-running the inputs the log
  /// implies and checking every regenerated event. Throws ReplayError at the
  /// first offending index. An empty log yields a fresh idle session.
  GameSession replay(const std::vector<SessionEvent>& log) const;

  /// Canvas for standard-mode stimuli: the board's physical extent.
  Point2 stimulus_position(std::uint64_t seed, int index) const;

 private:
  void advance_clock(GameSession& s, std::int64_t t, Step& step) const;
  void dispatch(GameSession& s, const Input& in, Step& step) const;
  void assign_word(GameSession& s, std::int64_t t, Step& step) const;
  void emit(GameSession& s, Step& step, std::int64_t t, std::string_view actor, EventKind kind, nlohmann::json payload) const;

  GameConfig config_;
  std::shared_ptr<const std::vector<DictionaryEntry>> dictionary_;
  std::shared_ptr<const BoardLayout> board_;
};

}  // namespace gazequiz
