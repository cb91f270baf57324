#include "gazequiz/net/websocket_server.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "gazequiz/error.hpp"
#include "gazequiz/image.hpp"
#include "gazequiz/log.hpp"

namespace gazequiz::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Strand = asio::strand<asio::io_context::executor_type>;

namespace {

std::string error_frame(const std::string& session_id, const std::string& code, const std::string& message) {
  ServerMessage m;
  m.kind = ServerKind::error;
  m.session_id = session_id;
  m.payload = {{"code", code}, {"message", message}};
  return format_server_message(m);
}

}  // namespace

class WsConnection;

struct Slot {
  explicit Slot(asio::io_context& ioc) : strand(asio::make_strand(ioc)), timer(strand) {}
  std::shared_ptr<SessionRuntime> runtime;
  Strand strand;
  asio::steady_timer timer;
  std::map<std::string, std::weak_ptr<WsConnection>> by_token;
};

struct WebSocketServer::Impl {
  Impl(ServerOptions o, std::shared_ptr<SessionHost> h)
      : options(std::move(o)), host(std::move(h)), acceptor(ioc), t0(std::chrono::steady_clock::now()) {}

  std::int64_t now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  }

  std::shared_ptr<Slot> slot_for(const std::string& session_id, bool create) {
    std::lock_guard lock(mu);
    const auto it = slots.find(session_id);
    if (it != slots.end()) return it->second;
    if (!create) return nullptr;
    auto slot = std::make_shared<Slot>(ioc);
    slot->runtime = host->get_or_create(session_id);
    slots[session_id] = slot;
    schedule_tick(slot);
    return slot;
  }

  void schedule_tick(const std::shared_ptr<Slot>& slot);
  void dispatch(const std::shared_ptr<WsConnection>& conn, std::string text);
  void deliver(Slot& slot, const std::shared_ptr<WsConnection>& sender, const std::vector<Outbound>& out);
  void connection_closed(const std::shared_ptr<WsConnection>& conn);
  void do_accept();

  ServerOptions options;
  std::shared_ptr<SessionHost> host;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::chrono::steady_clock::time_point t0;
  std::vector<std::thread> threads;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Slot>> slots;
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;
  std::uint16_t bound_port = 0;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, WebSocketServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(server_.options.max_message_bytes);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->do_read();
    });
  }

  void send(std::string text) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->queue_.push_back(std::move(text));
      if (self->queue_.size() == 1) self->do_write();
    });
  }

  std::pair<std::string, std::string> binding() const {
    std::lock_guard lock(mu_);
    return {session_id_, token_};
  }
  void bind(const std::string& session_id, const std::string& token) {
    std::lock_guard lock(mu_);
    session_id_ = session_id;
    token_ = token;
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.connection_closed(self);
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.dispatch(self, std::move(text));
      self->do_read();
    });
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->queue_.clear();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->do_write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  WebSocketServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  mutable std::mutex mu_;
  std::string session_id_;
  std::string token_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, WebSocketServer::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

 private:
  void on_request() {
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), server_)->run(std::move(req_));
      return;
    }
    const std::string target(req_.target());
    if (req_.method() != http::verb::get) return respond(http::status::method_not_allowed, "text/plain", "GET only\n");
    if (target == "/health") return respond(http::status::ok, "text/plain", "ok\n");
    const std::string prefix = "/captures/";
    const std::string suffix = ".pgm";
    if (target.rfind(prefix, 0) == 0 && target.size() > prefix.size() + suffix.size() &&
        target.compare(target.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string rest = target.substr(prefix.size(), target.size() - prefix.size() - suffix.size());
      const auto slash = rest.find('/');
      if (slash != std::string::npos) {
        serve_capture(rest.substr(0, slash), rest.substr(slash + 1));
        return;
      }
    }
    respond(http::status::not_found, "text/plain", "not found\n");
  }

  void serve_capture(const std::string& session_id, std::string capture_id) {
    const auto slot = server_.slot_for(session_id, false);
    if (!slot) return respond(http::status::not_found, "text/plain", "no such session\n");
    asio::post(slot->strand, [self = shared_from_this(), slot, capture_id = std::move(capture_id)]() {
      bool normalized = false;
      std::string id = capture_id;
      const std::string norm = "_norm";
      if (id.size() > norm.size() && id.compare(id.size() - norm.size(), norm.size(), norm) == 0) {
        normalized = true;
        id.resize(id.size() - norm.size());
      }
      std::string body;
      if (const CaptureOutcome* c = slot->runtime->capture_outcome(id)) {
        const GrayImage& img = normalized ? c->normalized_image : c->image;
        if (!img.empty()) body = encode_pgm(img);
      }
      asio::post(self->stream_.get_executor(), [self, body = std::move(body)]() {
        if (body.empty()) return self->respond(http::status::not_found, "text/plain", "no such capture\n");
        self->respond(http::status::ok, "image/x-portable-graymap", body);
      });
    });
  }

  void respond(http::status status, const char* content_type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  WebSocketServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void WebSocketServer::Impl::schedule_tick(const std::shared_ptr<Slot>& slot) {
  slot->timer.expires_after(std::chrono::milliseconds(options.tick_ms));
  slot->timer.async_wait([this, slot](beast::error_code ec) {
    if (ec) return;
    deliver(*slot, nullptr, slot->runtime->tick(now_ms()));
    if (!slot->runtime->finished()) schedule_tick(slot);
  });
}

void WebSocketServer::Impl::dispatch(const std::shared_ptr<WsConnection>& conn, std::string text) {
  std::string session_id;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_object() && j.contains("session_id") && j["session_id"].is_string()) session_id = j["session_id"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  if (session_id.empty()) {
    conn->send(error_frame("", "invalid_message", "message needs a session_id"));
    return;
  }
  std::shared_ptr<Slot> slot;
  try {
    slot = slot_for(session_id, true);
  } catch (const Error& e) {
    conn->send(error_frame(session_id, "invalid_message", e.what()));
    return;
  }
  asio::post(slot->strand, [this, slot, conn, session_id, text = std::move(text)]() {
    const auto out = slot->runtime->handle_text(text, now_ms());
    const auto [bound_session, bound_token] = conn->binding();
    std::string claimed;
    try {
      const auto m = parse_client_message(text);
      if (m.kind == ClientKind::join && !m.token.empty() && slot->runtime->has_token(m.token)) claimed = m.token;
    } catch (const Error&) {
    }
    if (claimed.empty() && bound_token.empty()) {
      for (const auto& o : out) {
        if (o.message.kind != ServerKind::state_snapshot || o.recipient.empty()) continue;
        if (slot->by_token.count(o.recipient) && !slot->by_token[o.recipient].expired()) continue;
        claimed = o.recipient;
        break;
      }
    }
    if (!claimed.empty()) {
      slot->by_token[claimed] = conn;
      conn->bind(session_id, claimed);
      log::info("connection_bound", {{"session_id", session_id}, {"token_suffix", claimed.substr(claimed.size() - 4)}});
    }
    deliver(*slot, conn, out);
  });
}

void WebSocketServer::Impl::deliver(Slot& slot, const std::shared_ptr<WsConnection>& sender,
                                    const std::vector<Outbound>& out) {
  for (const auto& o : out) {
    std::shared_ptr<WsConnection> target;
    if (o.recipient.empty()) {
      target = sender;
    } else if (const auto it = slot.by_token.find(o.recipient); it != slot.by_token.end()) {
      target = it->second.lock();
    }
    if (target) target->send(format_server_message(o.message));
  }
}

void WebSocketServer::Impl::connection_closed(const std::shared_ptr<WsConnection>& conn) {
  const auto [session_id, token] = conn->binding();
  if (token.empty()) return;
  const auto slot = slot_for(session_id, false);
  if (!slot) return;
  asio::post(slot->strand, [this, slot, conn, token = token]() {
    const auto it = slot->by_token.find(token);
    if (it != slot->by_token.end() && it->second.lock() != conn && !it->second.expired()) return;  // already rejoined
    slot->by_token.erase(token);
    deliver(*slot, nullptr, slot->runtime->disconnect(token, now_ms()));
  });
}

void WebSocketServer::Impl::do_accept() {
  acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), *this)->run();
    do_accept();
  });
}

WebSocketServer::WebSocketServer(ServerOptions options, std::shared_ptr<SessionHost> host)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(host))) {
  if (!impl_->host) throw Error(ErrorCode::ConfigError, "server needs a session host");
  if (impl_->options.threads < 1 || impl_->options.tick_ms < 1) {
    throw Error(ErrorCode::ConfigError, "threads and tick_ms must be positive");
  }
}

WebSocketServer::~WebSocketServer() { stop(); }

void WebSocketServer::start() {
  auto& s = *impl_;
  beast::error_code ec;
  const auto address = asio::ip::make_address(s.options.address, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "bad listen address '" + s.options.address + "'");
  const tcp::endpoint endpoint(address, s.options.port);
  s.acceptor.open(endpoint.protocol(), ec);
  if (!ec) s.acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(endpoint, ec);
  if (!ec) s.acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::ConfigError,
                "cannot listen on " + s.options.address + ":" + std::to_string(s.options.port) + ": " + ec.message());
  }
  s.bound_port = s.acceptor.local_endpoint().port();
  s.do_accept();
  for (int i = 0; i < s.options.threads; ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
  log::info("server_listening", {{"address", s.options.address}, {"port", s.bound_port}});
}

std::uint16_t WebSocketServer::port() const { return impl_->bound_port; }

void WebSocketServer::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [this] { return impl_->stopped; });
}

void WebSocketServer::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->stop_mu);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->threads.clear();
  impl_->stop_cv.notify_all();
  log::info("server_stopped");
}

}  // namespace gazequiz::net
