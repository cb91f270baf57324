#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gazequiz {

inline constexpr int kProtocolVersion = 1;

enum class ClientKind { join, start, ready, trigger_capture, approve_capture, reject_capture, mark, answer, proceed };
std::string_view to_string(ClientKind k);
std::optional<ClientKind> client_kind_from_string(std::string_view s);

/// {"v":1,"kind":..,"session_id":..,"token":..,"payload":{..}}
struct ClientMessage {
  ClientKind kind = ClientKind::join;
  std::string session_id;
  std::string token;  // empty only on a first join
  nlohmann::json payload = nlohmann::json::object();
};

/// Validates version, kind and the kind-specific payload; throws
/// ValidationError with a message fit for an error reply.
ClientMessage parse_client_message(std::string_view text);
std::string format_client_message(const ClientMessage& m);

enum class ServerKind {
  state_snapshot,
  word_prompt,
  clue_view,
  countdown,
  captured_image,
  timer,
  clue_revealed,
  result,
  roles_switched,
  session_finished,
  error,
};
std::string_view to_string(ServerKind k);
std::optional<ServerKind> server_kind_from_string(std::string_view s);

/// {"v":1,"seq":..,"kind":..,"session_id":..,"payload":{..}}; seq counts
/// per recipient from 1.
struct ServerMessage {
  ServerKind kind = ServerKind::state_snapshot;
  std::uint64_t seq = 0;
  std::string session_id;
  nlohmann::json payload = nlohmann::json::object();
};

std::string format_server_message(const ServerMessage& m);
ServerMessage parse_server_message(std::string_view text);

}  // namespace gazequiz
