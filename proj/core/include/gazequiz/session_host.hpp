#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gazequiz/capture.hpp"
#include "gazequiz/engine.hpp"
#include "gazequiz/protocol.hpp"
#include "gazequiz/store.hpp"
#include "gazequiz/synthetic.hpp"

namespace gazequiz {

/// Produces a capture for the questioner's camera. Implementations used by
/// more than one session must be reentrant.
class CaptureService {
 public:
  virtual ~CaptureService() = default;
  virtual CaptureOutcome capture(const CaptureContext& ctx, const CaptureTarget& target) = 0;
};

/// Runs the capture pipeline with one set of drivers per board side.
class DriverCaptureService : public CaptureService {
 public:
  struct SideDrivers {
    std::unique_ptr<FrameSource> source;
    std::unique_ptr<FaceDetector> detector;
    std::unique_ptr<GazeEstimator> estimator;
  };

  DriverCaptureService(std::shared_ptr<const BoardLayout> board, Calibration calibration, CaptureSettings settings);
  void set_drivers(Side side, SideDrivers drivers);
  CaptureOutcome capture(const CaptureContext& ctx, const CaptureTarget& target) override;

 private:
  std::shared_ptr<const BoardLayout> board_;
  Calibration calibration_;
  CaptureSettings settings_;
  std::map<Side, SideDrivers> drivers_;
};

struct SyntheticDriverConfig {
  double estimator_noise_deg = 5.0;
  double estimator_outlier_rate = 0.0;
  double blink_rate = 0.0;
  double absent_rate = 0.0;
  double head_jitter_mm = 0.0;
  double fixation_error_deg = 0.0;
};

std::unique_ptr<DriverCaptureService> make_synthetic_capture_service(std::shared_ptr<const BoardLayout> board,
                                                                     const Calibration& calibration,
                                                                     const CaptureSettings& settings,
                                                                     const SyntheticDriverConfig& config, std::uint64_t seed);

/// Message for one participant; an empty recipient means "whoever sent the
/// message being handled" (used before a token exists or when it is bad).
struct Outbound {
  std::string recipient;
  ServerMessage message;
};

struct TraceEntry {
  enum class Type { message, disconnect, tick };
  Type type = Type::tick;
  std::int64_t at_ms = 0;  // host wall clock
  std::string text;        // message body, or the token for disconnects
};

nlohmann::ordered_json trace_entry_to_json(const TraceEntry& e);
TraceEntry trace_entry_from_json(const nlohmann::json& j);
void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace);
std::vector<TraceEntry> read_trace(std::istream& in);

struct RuntimeContext {
  std::shared_ptr<const Engine> engine;
  std::shared_ptr<CaptureService> capture;
  SessionStore* store = nullptr;  // optional persistence
  std::uint64_t seed = 0;
  std::int64_t grace_ms = 120'000;
  bool record_trace = true;
  /// Called before a sample is persisted; throwing marks it unsaved. Used to
  /// inject storage faults.
  std::function<void(const GazeSample&)> before_persist;
};

/// One hosted session: pairs joined clients, drives the engine, runs
/// captures, persists approved samples and produces role-filtered messages.
/// Deterministic given the seed and the sequence of calls. Not thread-safe;
/// callers serialize access per session.
class SessionRuntime {
 public:
  SessionRuntime(std::string session_id, RuntimeContext ctx);

  const std::string& session_id() const { return session_id_; }
  const Engine& engine() const { return *ctx_.engine; }

  /// Parses and handles one client message. Malformed or illegal messages
  /// produce an error reply and leave the session unchanged.
  std::vector<Outbound> handle_text(std::string_view text, std::int64_t now_ms);
  std::vector<Outbound> handle(const ClientMessage& message, std::int64_t now_ms);
  /// The connection holding `token` went away. The game clock pauses until
  /// every player is back or the grace period ends the session.
  std::vector<Outbound> disconnect(const std::string& token, std::int64_t now_ms);
  std::vector<Outbound> tick(std::int64_t now_ms);

  bool finished() const { return closed_; }
  bool paused() const { return paused_; }
  const std::optional<GameSession>& game() const { return game_; }
  std::vector<SessionEvent> event_log() const;
  const std::vector<TraceEntry>& trace() const { return trace_; }
  std::optional<std::string> participant_for_token(const std::string& token) const;
  bool has_token(const std::string& token) const { return participant_for_token(token).has_value(); }

  /// Capture held in memory (pending or already decided).
  const CaptureOutcome* capture_outcome(const std::string& capture_id) const;
  std::size_t unsaved_captures() const { return unsaved_; }
  std::int64_t game_ms(std::int64_t now_ms) const;

 private:
  struct Player {
    std::string token;
    std::string participant_id;
    Side side = Side::A;
    bool connected = true;
    bool started = false;
    bool wearing_eyetracker = false;
    bool exclude_from_dataset = false;
  };

  using Out = std::vector<Outbound>;

  void handle_parsed(const ClientMessage& m, std::int64_t now, Out& out);
  void on_join(const ClientMessage& m, std::int64_t now, Out& out);
  void on_action(Player& p, const ClientMessage& m, std::int64_t now, Out& out);
  void start_game(std::int64_t now, Out& out);
  void apply_input(const Input& in, std::int64_t now, Out& out);
  void sync_events();
  void run_effects(const Step& step, std::int64_t now, Out& out);
  void run_capture(std::int64_t now, Out& out);
  void persist(const std::string& capture_id, Out& out);
  void abandon(std::int64_t now, Out& out);
  void close(const std::string& status);
  void update_timer(std::int64_t now, Out& out);

  void send(const std::string& recipient, ServerKind kind, nlohmann::json payload, Out& out);
  void send_all(ServerKind kind, const nlohmann::json& payload, Out& out);
  void send_error(const std::string& recipient, const std::string& code, const std::string& message, Out& out);
  void broadcast_snapshots(std::int64_t now, Out& out);
  nlohmann::json snapshot_for(const Player& p, std::int64_t now) const;
  void send_role_views(const Player& p, Out& out);
  nlohmann::json word_prompt_payload() const;
  nlohmann::json clue_view_payload() const;
  nlohmann::json captured_image_payload(const std::string& capture_id) const;

  Player* find_token(const std::string& token);
  const Player* find_token(const std::string& token) const;
  const Player* find_participant(const std::string& participant_id) const;
  std::string token_of(const std::string& participant_id) const;
  std::string role_of(const Player& p) const;
  std::size_t capacity() const { return mode_ == Mode::gamified ? 2 : 1; }
  bool running() const { return game_ && game_->phase != Phase::finished; }

  std::string session_id_;
  RuntimeContext ctx_;
  Mode mode_ = Mode::gamified;
  bool mode_fixed_ = false;
  std::vector<Player> players_;
  std::uint64_t issued_ = 0;
  std::optional<GameSession> game_;
  std::size_t persisted_events_ = 0;

  bool paused_ = false;
  std::int64_t clock_base_ms_ = 0;    // game time at clock_anchor_ms_
  std::int64_t clock_anchor_ms_ = 0;  // wall time when the clock last resumed
  std::int64_t paused_since_ms_ = 0;
  bool closed_ = false;
  int capture_counter_ = 0;
  std::int64_t last_timer_second_ = -1;
  bool dirty_ = false;

  std::map<std::string, CaptureOutcome> captures_;
  std::size_t unsaved_ = 0;
  std::map<std::string, std::uint64_t> seq_;
  std::vector<TraceEntry> trace_;
};

/// Replays a recorded trace against a fresh runtime and returns it.
std::unique_ptr<SessionRuntime> replay_trace(const std::string& session_id, const RuntimeContext& ctx,
                                             const std::vector<TraceEntry>& trace, std::vector<Outbound>* messages = nullptr);

/// Thread-safe registry of runtimes keyed by session id. Runtime seeds are
/// derived from the host seed and the session id.
class SessionHost {
 public:
  explicit SessionHost(RuntimeContext base);

  /// Creates the runtime on first use. Throws ValidationError for session
  /// ids that are not safe file names.
  std::shared_ptr<SessionRuntime> get_or_create(const std::string& session_id);
  std::shared_ptr<SessionRuntime> find(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  /// Drops finished runtimes; returns how many were removed.
  std::size_t reap_finished();

 private:
  RuntimeContext base_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<SessionRuntime>> sessions_;
};

}  // namespace gazequiz
