#include "gazequiz/protocol.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "gazequiz/error.hpp"
#include "gazequiz/unicode.hpp"

namespace gazequiz {

namespace {

constexpr std::array<std::pair<ClientKind, std::string_view>, 9> kClientKinds{{
    {ClientKind::join, "join"},
    {ClientKind::start, "start"},
    {ClientKind::ready, "ready"},
    {ClientKind::trigger_capture, "trigger_capture"},
    {ClientKind::approve_capture, "approve_capture"},
    {ClientKind::reject_capture, "reject_capture"},
    {ClientKind::mark, "mark"},
    {ClientKind::answer, "answer"},
    {ClientKind::proceed, "proceed"},
}};

constexpr std::array<std::pair<ServerKind, std::string_view>, 11> kServerKinds{{
    {ServerKind::state_snapshot, "state_snapshot"},
    {ServerKind::word_prompt, "word_prompt"},
    {ServerKind::clue_view, "clue_view"},
    {ServerKind::countdown, "countdown"},
    {ServerKind::captured_image, "captured_image"},
    {ServerKind::timer, "timer"},
    {ServerKind::clue_revealed, "clue_revealed"},
    {ServerKind::result, "result"},
    {ServerKind::roles_switched, "roles_switched"},
    {ServerKind::session_finished, "session_finished"},
    {ServerKind::error, "error"},
}};

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::ValidationError, why); }

void only_keys(const nlohmann::json& payload, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : payload.items()) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || key == a;
    if (!ok) invalid("unexpected payload field '" + key + "'");
  }
}

void validate_client_payload(ClientKind kind, const nlohmann::json& p) {
  switch (kind) {
    case ClientKind::join:
      only_keys(p, {"mode", "wearing_eyetracker", "exclude_from_dataset"});
      if (p.contains("mode") && !(p["mode"] == "gamified" || p["mode"] == "standard")) invalid("mode must be gamified or standard");
      for (const char* flag : {"wearing_eyetracker", "exclude_from_dataset"}) {
        if (p.contains(flag) && !p[flag].is_boolean()) invalid(std::string(flag) + " must be a boolean");
      }
      return;
    case ClientKind::mark: {
      only_keys(p, {"board_xy_mm"});
      const auto it = p.find("board_xy_mm");
      if (it == p.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        invalid("mark needs board_xy_mm: [x, y]");
      }
      if (!std::isfinite((*it)[0].get<double>()) || !std::isfinite((*it)[1].get<double>())) invalid("mark must be finite");
      return;
    }
    case ClientKind::answer: {
      only_keys(p, {"answer"});
      const auto it = p.find("answer");
      if (it == p.end() || !it->is_string()) invalid("answer needs a string field 'answer'");
      if (!unicode::is_valid_utf8(it->get<std::string>())) invalid("answer is not valid UTF-8");
      return;
    }
    default:
      only_keys(p, {});
      return;
  }
}

}  // namespace

std::string_view to_string(ClientKind k) {
  for (const auto& [kind, name] : kClientKinds)
    if (kind == k) return name;
  return "unknown";
}

std::optional<ClientKind> client_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kClientKinds)
    if (name == s) return kind;
  return std::nullopt;
}

std::string_view to_string(ServerKind k) {
  for (const auto& [kind, name] : kServerKinds)
    if (kind == k) return name;
  return "unknown";
}

std::optional<ServerKind> server_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kServerKinds)
    if (name == s) return kind;
  return std::nullopt;
}

ClientMessage parse_client_message(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    invalid("message is not valid JSON");
  }
  if (!j.is_object()) invalid("message must be an object");
  if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != kProtocolVersion) {
    invalid("unsupported protocol version");
  }
  if (!j.contains("kind") || !j["kind"].is_string()) invalid("missing kind");
  const auto kind = client_kind_from_string(j["kind"].get<std::string>());
  if (!kind) invalid("unknown kind '" + j["kind"].get<std::string>() + "'");
  if (!j.contains("session_id") || !j["session_id"].is_string() || j["session_id"].get<std::string>().empty()) {
    invalid("missing session_id");
  }
  ClientMessage m;
  m.kind = *kind;
  m.session_id = j["session_id"].get<std::string>();
  if (j.contains("token")) {
    if (!j["token"].is_string()) invalid("token must be a string");
    m.token = j["token"].get<std::string>();
  }
  if (m.kind != ClientKind::join && m.token.empty()) invalid("token required");
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) invalid("payload must be an object");
    m.payload = j["payload"];
  }
  validate_client_payload(m.kind, m.payload);
  return m;
}

std::string format_client_message(const ClientMessage& m) {
  nlohmann::ordered_json j;
  j["v"] = kProtocolVersion;
  j["kind"] = to_string(m.kind);
  j["session_id"] = m.session_id;
  if (!m.token.empty()) j["token"] = m.token;
  j["payload"] = m.payload;
  return j.dump();
}

std::string format_server_message(const ServerMessage& m) {
  nlohmann::ordered_json j;
  j["v"] = kProtocolVersion;
  j["seq"] = m.seq;
  j["kind"] = to_string(m.kind);
  j["session_id"] = m.session_id;
  j["payload"] = m.payload;
  return j.dump();
}

ServerMessage parse_server_message(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ServerMessage m;
    const auto kind = server_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) invalid("unknown server message kind");
    m.kind = *kind;
    m.seq = j.at("seq").get<std::uint64_t>();
    m.session_id = j.at("session_id").get<std::string>();
    m.payload = j.at("payload");
    return m;
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("server message: ") + e.what());
  }
}

}  // namespace gazequiz
