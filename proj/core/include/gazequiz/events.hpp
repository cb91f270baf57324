#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace gazequiz {

enum class EventKind {
  game_started,
  word_assigned,
  ready,
  capture_triggered,
  capture_requested,  // countdown elapsed; the capture pipeline was asked for a frame
  capture_completed,
  capture_approved,
  capture_rejected,
  mark_recorded,
  answer_submitted,
  clue_revealed,
  timeout,
  result_shown,
  roles_switched,
  stimulus_shown,
  finished,
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

/// Actors that are not players.
inline constexpr std::string_view kSystemActor = "system";
inline constexpr std::string_view kCaptureActor = "capture";
inline constexpr std::string_view kServerActor = "server";

struct SessionEvent {
  std::int64_t t_ms = 0;  // session clock, milliseconds
  std::string actor;
  EventKind kind = EventKind::game_started;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// Checks the kind-specific payload schema; throws ValidationError.
void validate_payload(EventKind kind, const nlohmann::json& payload);

/// One event per line: {"t_ms":..,"actor":..,"kind":..,"payload":{..}}
/// with keys in that order and payload keys sorted.
std::string to_line(const SessionEvent& event);
SessionEvent event_from_line(std::string_view line);

void write_event_log(std::ostream& out, const std::vector<SessionEvent>& log);
/// Throws ReplayError at the first line that does not parse.
std::vector<SessionEvent> read_event_log(std::istream& in);

}  // namespace gazequiz
