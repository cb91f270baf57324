#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "gazequiz/session_host.hpp"

namespace gazequiz::net {

struct ServerOptions {
  std::string address = "0.0.0.0";
  std::uint16_t port = 8080;  // 0 picks a free port
  int threads = 2;
  int tick_ms = 100;
  std::size_t max_message_bytes = 64 * 1024;
};

/// WebSocket front end for a SessionHost. Clients connect to
/// ws://host:port/ and exchange JSON text frames. All work for one session
/// runs on that session's strand; connections are served by a thread pool.
/// Plain HTTP GET /captures/<session>/<capture>.pgm returns held capture
/// images and GET /health returns "ok".
class WebSocketServer {
 public:
  WebSocketServer(ServerOptions options, std::shared_ptr<SessionHost> host);
  ~WebSocketServer();
  WebSocketServer(const WebSocketServer&) = delete;
  WebSocketServer& operator=(const WebSocketServer&) = delete;

  /// Binds and starts accepting. Throws Error(ConfigError) when the address
  /// cannot be bound, e.g. the port is busy.
  void start();
  /// Port actually bound; valid after start().
  std::uint16_t port() const;
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace gazequiz::net
