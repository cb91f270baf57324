#include "gazequiz/events.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <utility>

#include "gazequiz/error.hpp"

namespace gazequiz {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 16> kKinds{{
    {EventKind::game_started, "game_started"},
    {EventKind::word_assigned, "word_assigned"},
    {EventKind::ready, "ready"},
    {EventKind::capture_triggered, "capture_triggered"},
    {EventKind::capture_requested, "capture_requested"},
    {EventKind::capture_completed, "capture_completed"},
    {EventKind::capture_approved, "capture_approved"},
    {EventKind::capture_rejected, "capture_rejected"},
    {EventKind::mark_recorded, "mark_recorded"},
    {EventKind::answer_submitted, "answer_submitted"},
    {EventKind::clue_revealed, "clue_revealed"},
    {EventKind::timeout, "timeout"},
    {EventKind::result_shown, "result_shown"},
    {EventKind::roles_switched, "roles_switched"},
    {EventKind::stimulus_shown, "stimulus_shown"},
    {EventKind::finished, "finished"},
}};

enum class Field { string, integer, boolean, array, object, number };

bool matches(const nlohmann::json& v, Field f) {
  switch (f) {
    case Field::string: return v.is_string();
    case Field::integer: return v.is_number_integer();
    case Field::boolean: return v.is_boolean();
    case Field::array: return v.is_array();
    case Field::object: return v.is_object();
    case Field::number: return v.is_number();
  }
  return false;
}

void require(const nlohmann::json& payload, std::string_view kind, std::initializer_list<std::pair<const char*, Field>> fields) {
  for (const auto& [name, type] : fields) {
    const auto it = payload.find(name);
    if (it == payload.end() || !matches(*it, type)) {
      throw Error(ErrorCode::ValidationError, std::string(kind) + " payload needs field '" + name + "' of the right type");
    }
  }
}

void require_point(const nlohmann::json& payload, const char* name) {
  const auto it = payload.find(name);
  if (it == payload.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw Error(ErrorCode::ValidationError, std::string("field '") + name + "' must be a 2-element number array");
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

EventKind event_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKinds)
    if (n == name) return k;
  throw Error(ErrorCode::ValidationError, "unknown event kind '" + std::string(name) + "'");
}

void validate_payload(EventKind kind, const nlohmann::json& p) {
  if (!p.is_object()) throw Error(ErrorCode::ValidationError, "event payload must be an object");
  const auto name = to_string(kind);
  switch (kind) {
    case EventKind::game_started:
      require(p, name, {{"session_id", Field::string}, {"mode", Field::string}, {"players", Field::array}, {"seed", Field::integer}});
      break;
    case EventKind::word_assigned:
      require(p, name, {{"word_index", Field::integer}, {"word", Field::string}, {"glyphs", Field::array},
                        {"hidden", Field::array}, {"letter_ids", Field::array}, {"questioner", Field::string},
                        {"answerer", Field::string}});
      break;
    case EventKind::capture_triggered:
      require(p, name, {{"letter_index", Field::integer}, {"letter_id", Field::string}});
      break;
    case EventKind::capture_requested:
      require(p, name, {{"target", Field::object}});
      break;
    case EventKind::capture_completed:
      require(p, name, {{"capture_id", Field::string}, {"no_face", Field::boolean}});
      break;
    case EventKind::capture_approved:
    case EventKind::capture_rejected:
      require(p, name, {{"capture_id", Field::string}});
      break;
    case EventKind::mark_recorded:
      require(p, name, {{"letter_index", Field::integer}});
      require_point(p, "board_xy_mm");
      break;
    case EventKind::answer_submitted:
      require(p, name, {{"answer", Field::string}});
      break;
    case EventKind::clue_revealed:
      require(p, name, {{"index", Field::integer}, {"glyph", Field::string}});
      break;
    case EventKind::result_shown:
      require(p, name, {{"correct", Field::boolean}, {"word", Field::string}, {"score", Field::integer}});
      break;
    case EventKind::roles_switched:
      require(p, name, {{"questioner", Field::string}, {"answerer", Field::string}});
      break;
    case EventKind::stimulus_shown:
      require(p, name, {{"index", Field::integer}});
      require_point(p, "stimulus_xy_mm");
      break;
    case EventKind::finished:
      require(p, name, {{"reason", Field::string}, {"score", Field::integer}});
      break;
    case EventKind::ready:
    case EventKind::timeout:
      break;
  }
}

std::string to_line(const SessionEvent& event) {
  nlohmann::ordered_json j;
  j["t_ms"] = event.t_ms;
  j["actor"] = event.actor;
  j["kind"] = to_string(event.kind);
  j["payload"] = event.payload;
  return j.dump();
}

SessionEvent event_from_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);  // throws on malformed text
  SessionEvent e;
  e.t_ms = j.at("t_ms").get<std::int64_t>();
  e.actor = j.at("actor").get<std::string>();
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.payload = j.at("payload");
  validate_payload(e.kind, e.payload);
  return e;
}

void write_event_log(std::ostream& out, const std::vector<SessionEvent>& log) {
  for (const auto& e : log) out << to_line(e) << '\n';
}

std::vector<SessionEvent> read_event_log(std::istream& in) {
  std::vector<SessionEvent> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      log.push_back(event_from_line(line));
    } catch (const std::exception& e) {
      throw ReplayError(log.size(), e.what());
    }
  }
  return log;
}

}  // namespace gazequiz
