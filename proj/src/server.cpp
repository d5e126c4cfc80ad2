#include "airstar/server.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "airstar/error.hpp"

namespace airstar::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

bool from_client(const wire::WireMessage& m) {
  return std::holds_alternative<wire::Command>(m) || std::holds_alternative<wire::Click>(m) ||
         std::holds_alternative<wire::Gesture>(m) || std::holds_alternative<wire::Abort>(m);
}

// Outgoing NDJSON lines of one WebSocket. Lines of a coalescing kind replace
// a queued, not yet sent line of the same kind.
class WriteQueue {
 public:
  struct Item {
    std::string line;
    int kind;  // -1: never coalesced
  };
  // Returns true when a write should be started.
  bool push(std::string line, int kind) {
    if (kind >= 0) {
      for (std::size_t i = writing_ ? 1 : 0; i < items_.size(); ++i) {
        if (items_[i].kind == kind) {
          items_[i].line = std::move(line);
          return false;
        }
      }
    }
    items_.push_back({std::move(line), kind});
    if (writing_) return false;
    writing_ = true;
    return true;
  }
  const std::string& front() const { return items_.front().line; }
  // Returns true when another write should follow.
  bool pop() {
    items_.pop_front();
    writing_ = !items_.empty();
    return writing_;
  }
  void clear() {
    items_.clear();
    writing_ = false;
  }

 private:
  std::deque<Item> items_;
  bool writing_ = false;
};

int coalesce_kind(const wire::WireMessage& m) {
  if (std::holds_alternative<wire::Telemetry>(m)) return 0;
  if (std::holds_alternative<wire::FrameMeta>(m)) return 1;
  return -1;
}

// Splits a text frame into NDJSON lines and decodes each.
template <class OnMessage, class OnError>
void for_each_line(const std::string& data, OnMessage&& on_message, OnError&& on_error) {
  std::size_t start = 0;
  while (start <= data.size()) {
    std::size_t end = data.find('\n', start);
    if (end == std::string::npos) end = data.size();
    std::string_view line(data.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      try {
        on_message(wire::decode(line));
      } catch (const Error& e) {
        on_error(e);
      }
    }
    start = end + 1;
  }
}

}  // namespace

class WsSession;

struct Server::Impl : std::enable_shared_from_this<Server::Impl> {
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  std::string scenario_json;
  Handlers handlers;

  class Hub : public station::ClientSink {
   public:
    explicit Hub(Impl& s) : s_(s) {}
    void publish(const wire::WireMessage& m) override;

   private:
    Impl& s_;
  } hub{*this};

  mutable std::mutex mu;
  std::vector<std::weak_ptr<WsSession>> clients;
  std::weak_ptr<WsSession> link;

  void accept();
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  enum class Role { kClient, kLink };

  WsSession(tcp::socket&& socket, std::shared_ptr<Server::Impl> server, Role role)
      : ws_(std::move(socket)), server_(std::move(server)), role_(role) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  // Thread-safe.
  void send(const wire::WireMessage& m) {
    std::string line = wire::encode(m);
    line += '\n';
    net::post(ws_.get_executor(), [self = shared_from_this(), line = std::move(line), kind = coalesce_kind(m)]() mutable {
      if (self->queue_.push(std::move(line), kind)) self->write_next();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::lock_guard lock(server_->mu);
    if (role_ == Role::kClient) {
      server_->clients.push_back(weak_from_this());
    } else {
      server_->link = weak_from_this();
    }
    do_read();
  }

  void do_read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      queue_.clear();
      return;
    }
    const std::string data = beast::buffers_to_string(buf_.data());
    buf_.consume(buf_.size());
    auto reply_error = [this](const std::string& text) { send(wire::Event{"error", text, false}); };
    for_each_line(
        data,
        [&](const wire::WireMessage& m) {
          if (role_ == Role::kLink) {
            server_->handlers.on_link(m);
          } else if (from_client(m)) {
            if (server_->handlers.on_client) server_->handlers.on_client(m);
          } else {
            reply_error(std::string("clients may not send '") + wire::type_name(m) + "' messages");
          }
        },
        [&](const Error& e) { reply_error(e.what()); });
    do_read();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->queue_.clear();
        return;
      }
      if (self->queue_.pop()) self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buf_;
  std::shared_ptr<Server::Impl> server_;
  Role role_;
  WriteQueue queue_;
};

void Server::Impl::Hub::publish(const wire::WireMessage& m) {
  std::vector<std::shared_ptr<WsSession>> live;
  {
    std::lock_guard lock(s_.mu);
    auto& cs = s_.clients;
    cs.erase(std::remove_if(cs.begin(), cs.end(), [](const auto& w) { return w.expired(); }), cs.end());
    for (const auto& w : cs) {
      if (auto s = w.lock()) live.push_back(std::move(s));
    }
  }
  for (const auto& s : live) s->send(m);
}

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Server::Impl> server)
      : stream_(std::move(socket)), server_(std::move(server)) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buf_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      if (target == "/ws") {
        std::make_shared<WsSession>(stream_.release_socket(), server_, WsSession::Role::kClient)->run(std::move(req_));
        return;
      }
      if (target == "/link" && server_->handlers.on_link) {
        std::make_shared<WsSession>(stream_.release_socket(), server_, WsSession::Role::kLink)->run(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::access_control_allow_origin, "*");
    if (req_.method() == http::verb::get && (target == "/scenario" || target.rfind("/scenario?", 0) == 0)) {
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->body() = server_->scenario_json;
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) {
        self->do_read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
  std::shared_ptr<Server::Impl> server_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec == net::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), self)->run();
    self->accept();
  });
}

Server::Server(const std::string& host, int port, std::string scenario_json, Handlers handlers)
    : impl_(std::make_shared<Impl>()) {
  impl_->scenario_json = std::move(scenario_json);
  impl_->handlers = std::move(handlers);
  try {
    const tcp::endpoint ep(net::ip::make_address(host), static_cast<unsigned short>(port));
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    fail(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port) + ": " + e.what());
  }
}

Server::~Server() { stop(); }

int Server::port() const { return impl_->acceptor.local_endpoint().port(); }

station::ClientSink& Server::hub() { return impl_->hub; }

void Server::start(int threads) {
  if (!impl_->threads.empty()) return;
  impl_->accept();
  for (int i = 0; i < std::max(threads, 1); ++i) impl_->threads.emplace_back([impl = impl_] { impl->ioc.run(); });
}

void Server::stop() {
  if (impl_->threads.empty()) return;
  impl_->ioc.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

bool Server::send_link(const wire::WireMessage& m) {
  std::shared_ptr<WsSession> link;
  {
    std::lock_guard lock(impl_->mu);
    link = impl_->link.lock();
  }
  if (!link) return false;
  link->send(m);
  return true;
}

std::size_t Server::client_count() const {
  std::lock_guard lock(impl_->mu);
  std::size_t n = 0;
  for (const auto& w : impl_->clients) n += w.expired() ? 0 : 1;
  return n;
}

// ---- onboard link client ------------------------------------------------------------

struct LinkClient::Impl : std::enable_shared_from_this<LinkClient::Impl> {
  std::string host;
  int port = 0;
  std::function<void(const wire::WireMessage&)> on_message;
  net::io_context ioc;
  std::unique_ptr<websocket::stream<beast::tcp_stream>> ws;
  tcp::resolver resolver{ioc};
  net::steady_timer retry{ioc};
  beast::flat_buffer buf;
  WriteQueue queue;
  std::atomic<bool> up{false};
  std::uint64_t generation = 0;
  std::chrono::milliseconds backoff{250};
  std::thread thread;

  void connect() {
    const std::uint64_t gen = ++generation;
    ws = std::make_unique<websocket::stream<beast::tcp_stream>>(ioc);
    resolver.async_resolve(host, std::to_string(port),
                           [self = shared_from_this(), gen](beast::error_code ec, tcp::resolver::results_type r) {
                             if (ec || gen != self->generation) return self->lost(gen);
                             beast::get_lowest_layer(*self->ws).expires_after(std::chrono::seconds(5));
                             beast::get_lowest_layer(*self->ws).async_connect(
                                 r, [self, gen](beast::error_code ec2, const tcp::endpoint&) {
                                   if (ec2 || gen != self->generation) return self->lost(gen);
                                   self->handshake(gen);
                                 });
                           });
  }

  void handshake(std::uint64_t gen) {
    beast::get_lowest_layer(*ws).expires_never();
    ws->set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
    ws->async_handshake(host + ":" + std::to_string(port), "/link",
                        [self = shared_from_this(), gen](beast::error_code ec) {
                          if (ec || gen != self->generation) return self->lost(gen);
                          self->up = true;
                          self->backoff = std::chrono::milliseconds(250);
                          self->read(gen);
                        });
  }

  void read(std::uint64_t gen) {
    ws->async_read(buf, [self = shared_from_this(), gen](beast::error_code ec, std::size_t) {
      if (ec || gen != self->generation) return self->lost(gen);
      const std::string data = beast::buffers_to_string(self->buf.data());
      self->buf.consume(self->buf.size());
      for_each_line(data, [&](const wire::WireMessage& m) { self->on_message(m); }, [](const Error&) {});
      self->read(gen);
    });
  }

  void lost(std::uint64_t gen) {
    if (gen != generation) return;
    up = false;
    queue.clear();
    ++generation;
    retry.expires_after(backoff);
    backoff = std::min(backoff * 2, std::chrono::milliseconds(4000));
    retry.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->connect();
    });
  }

  void write_next(std::uint64_t gen) {
    ws->text(true);
    ws->async_write(net::buffer(queue.front()), [self = shared_from_this(), gen](beast::error_code ec, std::size_t) {
      if (gen != self->generation) return;
      if (ec) return self->lost(gen);
      if (self->queue.pop()) self->write_next(gen);
    });
  }
};

LinkClient::LinkClient(std::string host, int port, std::function<void(const wire::WireMessage&)> on_message)
    : impl_(std::make_shared<Impl>()) {
  impl_->host = std::move(host);
  impl_->port = port;
  impl_->on_message = std::move(on_message);
}

LinkClient::~LinkClient() { stop(); }

void LinkClient::start() {
  if (impl_->thread.joinable()) return;
  net::post(impl_->ioc, [impl = impl_] { impl->connect(); });
  impl_->thread = std::thread([impl = impl_] {
    auto guard = net::make_work_guard(impl->ioc);
    impl->ioc.run();
  });
}

void LinkClient::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->ioc.stop();
  impl_->thread.join();
  impl_->up = false;
}

bool LinkClient::connected() const { return impl_->up; }

void LinkClient::send(const wire::WireMessage& m) {
  if (!impl_->up) return;
  std::string line = wire::encode(m);
  line += '\n';
  net::post(impl_->ioc, [impl = impl_, line = std::move(line), kind = coalesce_kind(m)]() mutable {
    if (!impl->up) return;
    if (impl->queue.push(std::move(line), kind)) impl->write_next(impl->generation);
  });
}

}  // namespace airstar::server
